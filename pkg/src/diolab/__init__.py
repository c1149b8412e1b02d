"""diolab: desk-scale experiments on limsup sets in metric Diophantine approximation."""

__version__ = "0.1.0"
