"""Stochastic Runge-Kutta toolkit: tables, steppers, code generation and order studies."""

__version__ = "0.1.0"
