"""camalign: an instruction-level simulator of a resistive-CAM associative
processor with batch-write microcode scheduling, an energy/cycle model, and
wavefront sequence alignment verified against a dynamic-programming oracle.

Hot kernels run in a compiled extension when available; a numpy fallback is
selected at import otherwise (see ``camalign.backend``).
"""

from .backend import available_backends, backend_name
from .cam_array import CamArray
from .energy_model import EnergyLedger, EnergyParams, RunReport, report
from .errors import (AllocationError, AlphabetError, CapacityError,
                     ConfigurationError, OracleMismatchError, ScheduleError,
                     SimulatorError)
from .microcode import (ColumnMap, Field, MicroProgram, Strategy, TruthTable,
                        alloc, execute, match_score, schedule, vec_add,
                        vec_max, vec_sub)
from .alignment import (DNA, DNA_MASKED, PROTEIN, Alphabet, ScoringScheme,
                        WavefrontEngine, align_pairwise_global,
                        align_pairwise_local, align_semi_global, db_search,
                        dna_scheme, encode_sequence, init_database,
                        matrix_scheme, required_score_width,
                        reset_after_query)
from . import oracle

__version__ = "0.1.0"
