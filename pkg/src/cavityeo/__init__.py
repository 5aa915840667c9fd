"""cavityeo: design calculator for cavity electro-optic microwave-to-optical
quantum converters.

Computes the vacuum electro-optic coupling rate of a whispering-gallery ring
driven by a planar electrode pair from the simulated microwave and optical
fields, and evaluates conversion efficiency, pump-power budgets and added
noise of the linearized converter.
"""

__version__ = "0.1.0"
