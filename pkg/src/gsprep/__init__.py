"""Ground-state preparation and ground-energy estimation by spectral projection.

Statevector simulation of the Fourier-LCU projection method, minimum-label
search for unknown ground energies, phase-estimation and filtering baselines,
and a Chebyshev quantum-walk variant, all instrumented with a resource ledger.
"""

__version__ = "0.1.0"
