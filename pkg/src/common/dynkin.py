import re
from dataclasses import dataclass, replace
from typing import Optional

from src.common.errors import IncompleteDatum, ParseError, UnknownFamily


@dataclass(frozen=True)
class DynkinDatum:
    """Invariants of one simple factor (or of a semisimple group with one isotypic type)."""

    label: str
    dynkin_type: Optional[str]
    rank: Optional[int]
    k1_degree: int = 1
    o_G: Optional[int] = None
    o_Gsc: Optional[int] = None
    split: bool = True
    adjoint: bool = False
    simply_connected: bool = False
    instantiable: Optional[str] = None  # family name usable by matrix_groups

    @property
    def c_G(self) -> int:
        self.require("o_G", "o_Gsc")
        return (self.o_Gsc // self.o_G) ** self.k1_degree

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise IncompleteDatum(f"{self.label}: missing {', '.join(missing)}")

    @property
    def adjoint_label(self) -> str:
        self.require("dynkin_type", "rank")
        label = adjoint_label(self.dynkin_type, self.rank, self.split)
        return f"Res {label}" if self.k1_degree > 1 else label

    def with_k1(self, k1_degree: int) -> "DynkinDatum":
        return replace(self, k1_degree=k1_degree)


def adjoint_label(dynkin_type: str, rank: int, split: bool = True) -> str:
    """Name of the adjoint group of a type, using the low-rank coincidences."""
    if dynkin_type == "A":
        return f"PGL_{rank + 1}" if split else f"PGU_{rank + 1}"
    if dynkin_type in ("B", "C") and rank == 1:
        return "PGL_2"
    if dynkin_type in ("B", "C") and rank == 2:
        return "PGSp_4"
    if dynkin_type == "B":
        return f"SO_{2 * rank + 1}"
    if dynkin_type == "C":
        return f"PGSp_{2 * rank}"
    if dynkin_type == "D":
        if rank == 3:
            return "PGL_4" if split else "PGU_4"
        return f"PGSO^+_{2 * rank}" if split else f"PGSO^-_{2 * rank}"
    if dynkin_type == "G":
        return "G_2"
    return f"{dynkin_type}_{rank}"


# =========================
# TABLE
# =========================
def datum_for(name: str, size: int, k1_degree: int = 1, m: Optional[int] = None) -> DynkinDatum:
    """Datum of a named semisimple group (reductive names give their derived group)."""
    if name in ("SL", "GL"):
        return DynkinDatum(f"SL_{size}", "A", size - 1, k1_degree, size, size, True, False, True, "SL")
    if name == "PGL":
        return DynkinDatum(f"PGL_{size}", "A", size - 1, k1_degree, 1, size, True, True, size == 1, "PGL")
    if name == "SL_mod_mu_m":
        if not m or size % m:
            raise IncompleteDatum(f"SL_{size}/mu_{m} needs m dividing {size}")
        return DynkinDatum(f"SL_{size}/mu_{m}", "A", size - 1, k1_degree, size // m, size, True,
                           m == size, m == 1, "SL_mod_mu_m")
    if name in ("SU", "U"):
        return DynkinDatum(f"SU_{size}", "A", size - 1, k1_degree, size, size, False, False, True, "SU")
    if name == "PGU":
        return DynkinDatum(f"PGU_{size}", "A", size - 1, k1_degree, 1, size, False, True, False, None)
    if name in ("Sp", "GSp"):
        return DynkinDatum(f"Sp_{size}", "C", size // 2, k1_degree, 2, 2, True, False, True, "Sp")
    if name == "PGSp":
        return DynkinDatum(f"PGSp_{size}", "C", size // 2, k1_degree, 1, 2, True, True, False, "PGSp")
    if name in ("SO_plus", "SO_minus", "GSO_plus", "GSO_minus"):
        split = name.endswith("plus")
        fam = "SO_plus" if split else "SO_minus"
        if size % 2:
            return DynkinDatum(f"SO_{size}", "B", size // 2, k1_degree, 1, 2, True, True, False, "SO_plus")
        sign = "+" if split else "-"
        return DynkinDatum(f"SO^{sign}_{size}", "D", size // 2, k1_degree, 2, 4, split, False, False, fam)
    if name in ("PGSO_plus", "PGSO_minus"):
        split = name.endswith("plus")
        sign = "+" if split else "-"
        return DynkinDatum(f"PGSO^{sign}_{size}", "D", size // 2, k1_degree, 1, 4, split, True, False, name)
    if name in ("GSpin_odd", "Spin_odd"):
        n = size // 2
        return DynkinDatum(f"Spin_{size}", "B", n, k1_degree, 2, 2, True, False, True, None)
    if name in ("GSpin_plus", "GSpin_minus", "Spin_plus", "Spin_minus"):
        split = name.endswith("plus")
        sign = "+" if split else "-"
        return DynkinDatum(f"Spin^{sign}_{size}", "D", size // 2, k1_degree, 4, 4, split, False, True, None)
    if name in ("SO_odd_adjoint",):
        return DynkinDatum(f"SO_{size}", "B", size // 2, k1_degree, 1, 2, True, True, False, "SO_plus")
    if name == "G2":
        return DynkinDatum("G_2", "G", 2, k1_degree, 1, 1, True, True, True, None)
    raise UnknownFamily(f"no Dynkin datum for {name!r}")


# G~ = G / Z^0(G) for the reductive families of the criteria fixtures
TILDE_OF = {
    "GL": "PGL",
    "GSp": "PGSp",
    "GSO_plus": "PGSO_plus",
    "GSO_minus": "PGSO_minus",
    "GSpin_odd": "SO_odd_adjoint",
    "GSpin_plus": "SO_plus",
    "GSpin_minus": "SO_minus",
    "U": "PGU",
}


def tilde_datum(name: str, size: int, k1_degree: int = 1) -> DynkinDatum:
    if name not in TILDE_OF:
        return datum_for(name, size, k1_degree)
    return datum_for(TILDE_OF[name], size, k1_degree)


_LABEL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9]*)\s*\(\s*(\d+)\s*(?:,\s*m\s*=\s*(\d+))?\s*\)\s*$")


def parse_datum(text: str, k1_degree: int = 1) -> DynkinDatum:
    """'GSp(6)', 'GSpin_plus(8)', 'SL_mod_mu_m(4, m=2)', 'G2(7)'."""
    match = _LABEL_RE.match(text)
    if not match:
        raise ParseError(f"bad datum label {text!r}")
    name, size, m = match.groups()
    return datum_for(name, int(size), k1_degree, int(m) if m else None)
