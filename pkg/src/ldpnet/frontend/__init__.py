"""Frontend - Command line surface."""
