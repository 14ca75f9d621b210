"""Exact-arithmetic laboratory for assignment-based extended formulations of the TSP."""

from .instances import (
    AssignmentVector,
    LegVector,
    NodeId,
    Tour,
    TripletVector,
    TspInstance,
    assignment_to_tour,
    brute_force_lap,
    brute_force_tsp,
    tour_cost,
    tour_to_assignment,
    tour_to_legs,
)

__all__ = [
    "AssignmentVector",
    "LegVector",
    "NodeId",
    "Tour",
    "TripletVector",
    "TspInstance",
    "assignment_to_tour",
    "brute_force_lap",
    "brute_force_tsp",
    "tour_cost",
    "tour_to_assignment",
    "tour_to_legs",
]

__version__ = "0.1.0"
