"""Compiler for 1T1R RRAM arrays: netlists, layout, verification and read-settling analysis."""

__version__ = "0.1.0"
