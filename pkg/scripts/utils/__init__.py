"""Majorana equation simulator: lift algebra, spinor dynamics, ion-trap register."""

__version__ = "0.1.0"
