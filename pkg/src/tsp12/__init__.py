"""Exact tools for the subtour LP of the 1,2-TSP."""

from .instance import Instance, Tour, held_karp_opt, make_tour, w9
from .subtour import FracSolution, solve_f2m_lp, solve_min_2m, solve_subtour_lp, solve_tsp_ip

__version__ = "0.1.0"

__all__ = [
    "FracSolution", "Instance", "Tour", "held_karp_opt", "make_tour", "solve_f2m_lp",
    "solve_min_2m", "solve_subtour_lp", "solve_tsp_ip", "w9",
]
