"""ranloop: closed-loop 5G RAN KPI monitoring and optimization platform."""

__version__ = "0.1.0"
