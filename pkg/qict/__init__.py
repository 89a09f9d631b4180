# Quantum-optical induced-coherence tomography simulator
__version__ = "1.0.0"
