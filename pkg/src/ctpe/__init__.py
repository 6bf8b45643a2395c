"""High-order generator regression for continuous-time policy evaluation."""
