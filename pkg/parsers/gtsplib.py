from __future__ import annotations
import re
from typing import Dict, List, Tuple

from planners.gtsp import START_KEY, GtspInstance, GtspVertex

# Header lines look like "NAME : foo" or "DIMENSION: 12"
HEADER_RX = re.compile(r"^\s*([A-Z_]+)\s*:\s*(.*?)\s*$")
SECTION_RX = re.compile(r"^\s*([A-Z_]+_SECTION)\s*$")
NUM_RX = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")

SECTIONS = ("NODE_COORD_SECTION", "GTSP_SET_SECTION", "COST_OVERRIDE_SECTION")


class GtspFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_instance(instance: GtspInstance, name: str = "gatsbi") -> str:
    """
    GTSPLIB-style text. Nodes and sets are 1-based; set 1 is the START
    singleton. Overrides are written between node numbers; an override whose
    keys map to several vertices is expanded to every pair.
    """
    lines = [
        f"NAME : {name}",
        "TYPE : GTSP",
        f"DIMENSION : {len(instance)}",
        f"GTSP_SETS : {instance.n_clusters}",
        "EDGE_WEIGHT_TYPE : EUC_3D",
        "NODE_COORD_SECTION",
    ]
    for i, v in enumerate(instance.vertices):
        x, y, z = v.position
        lines.append(f"{i + 1} {_fmt(x)} {_fmt(y)} {_fmt(z)}")
    lines.append("GTSP_SET_SECTION")
    for ci, members in enumerate(instance.clusters):
        lines.append(" ".join([str(ci + 1)] + [str(v + 1) for v in members] + ["-1"]))
    if instance.overrides:
        by_key: Dict[tuple, List[int]] = {}
        for i, v in enumerate(instance.vertices):
            by_key.setdefault(v.key, []).append(i)
        rows: List[Tuple[int, int, float]] = []
        for pair, value in instance.overrides.items():
            ka, kb = tuple(pair)
            for a in by_key.get(ka, []):
                for b in by_key.get(kb, []):
                    if a < b:
                        rows.append((a, b, value))
                    elif b < a:
                        rows.append((b, a, value))
        if rows:
            lines.append("COST_OVERRIDE_SECTION")
            for a, b, value in sorted(set(rows)):
                lines.append(f"{a + 1} {b + 1} {_fmt(value)}")
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def load_instance(text: str) -> GtspInstance:
    """
    Parse text written by dump_instance (or any GTSPLIB EUC_3D file whose
    first set is a singleton start). Vertex keys become the node numbers, so
    overrides bind to exactly the listed node pairs.
    """
    header: Dict[str, str] = {}
    coords: Dict[int, Tuple[float, float, float]] = {}
    sets: List[List[int]] = []
    overrides: List[Tuple[int, int, float]] = []
    section = None

    for ln_no, raw in enumerate((text or "").splitlines(), start=1):
        ln = raw.strip()
        if not ln:
            continue
        if ln == "EOF":
            break
        m = SECTION_RX.match(ln)
        if m:
            if m.group(1) not in SECTIONS:
                raise GtspFormatError(f"line {ln_no}: unknown section {m.group(1)}")
            section = m.group(1)
            continue
        if section is None:
            h = HEADER_RX.match(ln)
            if not h:
                raise GtspFormatError(f"line {ln_no}: expected 'KEY : value'")
            header[h.group(1)] = h.group(2)
            continue
        nums = NUM_RX.findall(ln)
        if section == "NODE_COORD_SECTION":
            if len(nums) != 4:
                raise GtspFormatError(f"line {ln_no}: node lines need an id and 3 coordinates")
            coords[int(nums[0])] = (float(nums[1]), float(nums[2]), float(nums[3]))
        elif section == "GTSP_SET_SECTION":
            ids = [int(n) for n in nums]
            if len(ids) < 2 or ids[-1] != -1:
                raise GtspFormatError(f"line {ln_no}: set lines end with -1")
            sets.append(ids[1:-1])
        else:
            if len(nums) != 3:
                raise GtspFormatError(f"line {ln_no}: override lines need 2 nodes and a cost")
            overrides.append((int(nums[0]), int(nums[1]), float(nums[2])))

    if header.get("TYPE", "").upper() != "GTSP":
        raise GtspFormatError("TYPE must be GTSP")
    if header.get("EDGE_WEIGHT_TYPE", "EUC_3D").upper() != "EUC_3D":
        raise GtspFormatError("only EUC_3D edge weights are supported")
    dim = int(header.get("DIMENSION", len(coords)))
    if sorted(coords) != list(range(1, dim + 1)):
        raise GtspFormatError("node ids must run 1..DIMENSION")
    if "GTSP_SETS" in header and int(header["GTSP_SETS"]) != len(sets):
        raise GtspFormatError("GTSP_SETS does not match the set section")
    if not sets or len(sets[0]) != 1:
        raise GtspFormatError("set 1 must be the START singleton")

    # renumber so START is vertex 0 and vertices follow set order
    order = [n for members in sets for n in members]
    if sorted(order) != list(range(1, dim + 1)):
        raise GtspFormatError("sets must partition the nodes")
    new_id = {n: i for i, n in enumerate(order)}
    vertices: List[GtspVertex] = []
    clusters: List[List[int]] = []
    for ci, members in enumerate(sets):
        clusters.append([new_id[n] for n in members])
        for n in members:
            key = START_KEY if ci == 0 else ("node", n)
            vertices.append(GtspVertex(coords[n], ci, key))
    instance = GtspInstance(vertices, clusters, [None] * len(clusters))
    for a, b, value in overrides:
        instance.set_override(new_id[a], new_id[b], value)
    instance.validate()
    return instance
