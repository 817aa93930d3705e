"""Role-aware interruptibility modeling from phone and desktop event logs."""

__version__ = "0.1.0"
