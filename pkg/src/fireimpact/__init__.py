"""Wildfire extent reconstruction, dasymetric population downscaling, and
daily accounting of land, infrastructure, and population impacts on a
shared analysis grid."""

__version__ = "0.1.0"
