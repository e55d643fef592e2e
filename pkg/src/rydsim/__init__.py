"""rydsim: lattice avalanche-excitation simulator.

Subpackages:

* :mod:`rydsim.lattice`   -- three-state grid and synchronous stepping
* :mod:`rydsim.epidemic`  -- SIS/SIR experiment setup, scans, domain walls
* :mod:`rydsim.meanfield` -- driven three-level steady states, hysteresis,
  multistability
* :mod:`rydsim.fitting`   -- tanh / multi-tanh / Gaussian least squares
* :mod:`rydsim.config`    -- experiment configuration parsing
* :mod:`rydsim.runner`    -- experiment orchestration and file output
"""

__version__ = "0.1.0"
