"""Interleaved non-malleable extractors and codes over GF(2), with a tampering harness.

Submodules, bottom-up: ``bitlin`` (GF(2) linear algebra), ``field2m``
(GF(2^m) arithmetic), ``lincode`` (linear and dual-BCH codes), ``extlib``
(seeded, linear and two-source extractors, samplers, condensers), ``acb``
(advice correlation breaker), ``nmx`` (the extractor, its inverse and the
fiber sampler), ``nmcode`` (the code), ``tamperlab`` (adversaries and
statistical oracles) and ``cli``.
"""

from .bitlin import BitMatrix, BitVector, Permutation
from .nmcode import CodewordScheme, decode, encode, scheme
from .nmx import ParamProfile, ilext, ilnm, ilnm_inv, ilnm_sample_preimage, list_profiles, load_profile

__all__ = [
    "BitMatrix",
    "BitVector",
    "CodewordScheme",
    "ParamProfile",
    "Permutation",
    "decode",
    "encode",
    "ilext",
    "ilnm",
    "ilnm_inv",
    "ilnm_sample_preimage",
    "list_profiles",
    "load_profile",
    "scheme",
]
