# molecules/records.py
# Wire schema for molecule JSON lines (RDKit atom and bond features, precomputed).
from enum import IntEnum

from pydantic import BaseModel, ConfigDict, Field


class Chirality(IntEnum):
    UNSPECIFIED = 0
    CW = 1
    CCW = 2
    OTHER = 3


class Hybridization(IntEnum):
    # SP is not in the RDKit table of the report but occurs for linear carbons
    S = 0
    SP = 1
    SP2 = 2
    SP3 = 3
    SP3D = 4
    SP3D2 = 5


class BondDir(IntEnum):
    NONE = 0
    BEGIN_WEDGE = 1
    BEGIN_DASH = 2
    OTHER = 3


class BondType(IntEnum):
    SINGLE = 0
    DOUBLE = 1
    TRIPLE = 2
    AROMATIC = 3


MAX_ATOMIC_NUMBER = 118
MAX_CHARGE = 5


class AtomRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    z: int = Field(ge=1, le=MAX_ATOMIC_NUMBER)
    aromatic: bool = False
    charge: int = Field(default=0, ge=-MAX_CHARGE, le=MAX_CHARGE)
    chirality: int = Field(default=Chirality.UNSPECIFIED, ge=0, le=len(Chirality) - 1)
    degree: int = Field(ge=0)
    num_h: int = Field(default=0, ge=0)
    hybridization: int = Field(default=Hybridization.SP3, ge=0, le=len(Hybridization) - 1)


class BondRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    i: int = Field(ge=0)
    j: int = Field(ge=0)
    dir: int = Field(default=BondDir.NONE, ge=0, le=len(BondDir) - 1)
    type: int = Field(default=BondType.SINGLE, ge=0, le=len(BondType) - 1)
    in_ring: bool = False


class MoleculeRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    atoms: list[AtomRecord] = Field(min_length=1)
    bonds: list[BondRecord] = []
    gap_ev: float | None = None
