"""Toolchain for the XSM string machine.

The package bundles the machine simulator (single core and the two-core
NEXSM variant), its interactive kernel debugger, the SPL compiler and the
XFS disk-image tool.
"""

__version__ = "0.1.0"
