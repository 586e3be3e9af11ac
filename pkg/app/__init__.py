# Triwell - nonequilibrium triple-well + reservoir simulator
__version__ = "1.0.0"
