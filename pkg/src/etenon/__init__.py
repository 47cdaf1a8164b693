"""Levelled EHR sharing over an open, shuffled block store.

The pieces, bottom to top:

* :mod:`etenon.algebra` -- pairing suites (production curve and a
  small-prime mock) with operation counting.
* :mod:`etenon.policy` -- levelled access trees, the policy language,
  secret sharing over the tree.
* :mod:`etenon.mlabe` -- multi-level attribute-based encryption; one
  ciphertext, one sealed payload per level.
* :mod:`etenon.musig` -- three-round interactive co-signing with
  commitment-checked nonces.
* :mod:`etenon.tenon` -- record classification, block tokenization and
  pointer-linked chains.
* :mod:`etenon.tdb` -- the open store: verification gate, shuffling,
  persistence.
* :mod:`etenon.workflow` -- the multi-entity protocol: setup, the
  co-signing agreement, ingestion, retrieval, scenario runs.
* :mod:`etenon.cli` -- the ``etenon`` command.
"""

from .algebra import GroupSuite, get_suite
from .errors import EtenonError
from .mlabe import decrypt, encrypt, keygen, setup
from .musig import cosign, verify
from .policy import AccessTree, parse_policy
from .tdb import TenonDb
from .tenon import EhrRecord, build_structure, reconstruct, tokenize
from .workflow import phase_retrieval, phase_setup, run_agreement, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AccessTree",
    "EhrRecord",
    "EtenonError",
    "GroupSuite",
    "TenonDb",
    "build_structure",
    "cosign",
    "decrypt",
    "encrypt",
    "get_suite",
    "keygen",
    "parse_policy",
    "phase_retrieval",
    "phase_setup",
    "reconstruct",
    "run_agreement",
    "run_scenario",
    "setup",
    "tokenize",
    "verify",
    "__version__",
]
