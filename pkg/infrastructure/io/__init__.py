"""I/O helpers for specs, configs and suite artifacts."""
