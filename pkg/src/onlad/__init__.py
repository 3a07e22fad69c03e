"""Online sequential anomaly detection with OS-ELM autoencoders.

Submodules:

* ``matrix``   -- dense matrix helpers and activations
* ``oselm``    -- the OS-ELM learner (batch init, rank-1 / chunk / forgetting updates, FP-ELM)
* ``detector`` -- score-then-train anomaly detectors built on it
* ``core``     -- fixed-point emulation of the detector core, packets and cost model
* ``data``     -- CSV loading, normalization and splits
* ``bench``    -- AUC and the offline / online testbeds
"""

from .detector import FpelmDetector, OnladDetector, StepReport
from .matrix import Activation
from .oselm import OselmModel, UpdateStatus

__all__ = ["Activation", "FpelmDetector", "OnladDetector", "OselmModel", "StepReport", "UpdateStatus"]
__version__ = "0.1.0"
