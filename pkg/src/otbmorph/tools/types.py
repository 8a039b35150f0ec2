"""
Shared enumerations.

String-valued enums so they serialize directly into CSV, JSON and YAML.
"""

from enum import Enum


class Scenario(str, Enum):
    """
    Protection scenarios compared by the simulator.

    Attributes:
        UNPROTECTED: (i) plain embeddings
        GAUSSIAN: (ii) keyed Gaussian noise added to the probe embedding
        IMPLODE: (iii) radial implode applied to the face image
        OTB_MORPH: (iv) morph with a one-time random face, rotated every session
    """

    UNPROTECTED = "i"
    GAUSSIAN = "ii"
    IMPLODE = "iii"
    OTB_MORPH = "iv"

    @property
    def rotates(self) -> bool:
        """Whether accepted sessions rotate the key and the stored reference."""
        return self is Scenario.OTB_MORPH

    @property
    def image_domain(self) -> bool:
        """Whether the transform acts on the face image rather than the embedding."""
        return self in (Scenario.IMPLODE, Scenario.OTB_MORPH)

    @classmethod
    def parse(cls, value: "str | Scenario") -> "Scenario":
        if isinstance(value, Scenario):
            return value
        text = str(value).strip().lower()
        for member in cls:
            if text in (member.value, member.name.lower()):
                return member
        raise ValueError(f"Unknown scenario: {value!r}")


class ADKind(str, Enum):
    """Kinds of auxiliary data (transform key material)."""

    NONE = "none"
    NOISE_KEY = "noise_key"
    IMPLODE_KEY = "implode_key"
    RANDOM_FACE = "random_face"


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class Behavior(str, Enum):
    GENUINE = "genuine"
    ATTACKER = "attacker"


class TapPoint(str, Enum):
    """
    Attack points available to the adversary.

    Attributes:
        AP4: inject features directly into the matcher
        AP6: eavesdrop the client-server channel
        AP7: read the matcher's score
    """

    AP4 = "AP4"
    AP6 = "AP6"
    AP7 = "AP7"


class AttackSpace(str, Enum):
    EMBEDDING = "embedding"
    IMAGE = "image"


class BorderPolicy(str, Enum):
    """How warp output pixels outside every valid triangle are filled."""

    IDENTITY = "identity"
    CONSTANT = "constant"


EER_POINT = "EER"
FAR_TARGETS = (0.1, 0.01, 0.001)


def far_point(target: float) -> str:
    """Operating point name for a target false accept rate, e.g. ``FAR=0.01``."""
    return f"FAR={target:g}"


OPERATING_POINTS = (EER_POINT,) + tuple(far_point(t) for t in FAR_TARGETS)
