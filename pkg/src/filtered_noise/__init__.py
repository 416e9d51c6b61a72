"""Filtered noncommutative moments: adapted partitions and Fock-space operators."""
from filtered_noise._backend import NAME as BACKEND

__version__ = "0.1.0"
