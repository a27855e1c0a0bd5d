"""Design and validation tools for low-complexity non-binary LDPC codes."""

__version__ = "0.1.0"
