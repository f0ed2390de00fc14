"""Disease landscapes: the factor/edge/cluster structure obtained by running
the sieve on a multi-label outcome matrix.

Factor sizes are the bits of total correlation each layer explained; edge
weights are I(Y_i; Z_k) between each label and each layer's training factor,
computed on the original labels (not the remainders).  Each disease is
clustered to its argmax-weight factor, ties toward the lower factor id.
Edges also carry a normalized weight  I(Y;Z) / min(H(Y), H(Z))  so that
"strongly correlated" thresholds are scale-free across label prevalences.
"""

from dataclasses import dataclass

import numpy as np

from driftbench import jsonio
from driftbench.infotheory import DiscreteMatrix, entropy, mutual_information
from driftbench.sieve import SieveModel


@dataclass(frozen=True)
class LandscapeEdge:
    disease: str
    factor: int
    weight: float   # bits of I(Y; Z_factor)
    nmi: float      # weight / min(H(Y), H(Z_factor)); 0 when either entropy is 0


@dataclass
class DiseaseLandscape:
    factors: list      # (factor id, size in bits) pairs, id ascending
    edges: list        # LandscapeEdge, disease-major then factor order
    clusters: dict     # disease name -> factor id

    @property
    def diseases(self) -> list:
        return list(self.clusters.keys())

    def factor_size(self, factor_id: int) -> float:
        return dict(self.factors)[factor_id]

    def edge(self, disease: str, factor: int) -> LandscapeEdge:
        return self._edge_index()[(disease, factor)]

    def _edge_index(self):
        return {(e.disease, e.factor): e for e in self.edges}

    def to_dict(self) -> dict:
        return {
            "format": "driftbench-landscape-v1",
            "factors": [{"id": int(i), "size": float(s)} for i, s in self.factors],
            "edges": [
                {
                    "disease": e.disease,
                    "factor": int(e.factor),
                    "weight": float(e.weight),
                    "nmi": float(e.nmi),
                }
                for e in self.edges
            ],
            "clusters": {name: int(f) for name, f in self.clusters.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiseaseLandscape":
        return cls(
            factors=[(f["id"], f["size"]) for f in d["factors"]],
            edges=[
                LandscapeEdge(e["disease"], e["factor"], e["weight"], e["nmi"])
                for e in d["edges"]
            ],
            clusters={name: int(f) for name, f in d["clusters"].items()},
        )


def build_landscape(model: SieveModel, label_matrix: DiscreteMatrix,
                    disease_names=None) -> DiseaseLandscape:
    """Edges and clusters from a fitted sieve and the labels it was fit on."""
    if disease_names is None:
        disease_names = list(label_matrix.names)
    if len(disease_names) != label_matrix.d:
        raise ValueError("disease name count does not match label matrix")
    if list(model.input_names) != list(label_matrix.names):
        raise ValueError("model was not fit on this label matrix")
    factors_z = model.training_factors()
    if factors_z.shape[0] != label_matrix.n:
        raise ValueError("model training size does not match label matrix")

    k = model.n_layers
    h_z = [entropy(factors_z[:, j], clamp=False) for j in range(k)]
    weights = np.zeros((label_matrix.d, k))
    nmis = np.zeros((label_matrix.d, k))
    for i in range(label_matrix.d):
        y = label_matrix.column(i)
        h_y = entropy(y, clamp=False)
        for j in range(k):
            w = mutual_information(y, factors_z[:, j])
            weights[i, j] = w
            denom = min(h_y, h_z[j])
            nmis[i, j] = w / denom if denom > 0 else 0.0

    clusters = {}
    edges = []
    for i, name in enumerate(disease_names):
        clusters[name] = int(np.argmax(weights[i]))  # ties toward lower factor id
        for j in range(k):
            edges.append(LandscapeEdge(name, j, float(weights[i, j]), float(nmis[i, j])))

    factors = [(j, float(model.per_layer_tc[j])) for j in range(k)]
    return DiseaseLandscape(factors=factors, edges=edges, clusters=clusters)


def correlated_diseases(landscape: DiseaseLandscape, positive_set, tau: float) -> list:
    """The positive set plus every disease sharing a cluster with it whose
    normalized edge weight to that cluster's factor reaches tau.

    Always a superset of the input; returned in landscape disease order.
    """
    known = landscape.clusters
    positive = list(positive_set)
    for name in positive:
        if name not in known:
            raise ValueError(f"unknown disease name: {name}")
    active = {known[name] for name in positive}
    index = landscape._edge_index()
    keep = set(positive)
    for name, factor in known.items():
        if name in keep or factor not in active:
            continue
        if index[(name, factor)].nmi >= tau:
            keep.add(name)
    return [name for name in landscape.diseases if name in keep]


def _dot_escape(name: str) -> str:
    return '"' + name.replace('"', r"\"") + '"'


def export_landscape(landscape: DiseaseLandscape, fmt: str, path) -> None:
    """Write the landscape as canonical JSON or as a DOT graph.

    DOT scaling (documented, linear): factor node width = 0.6 + 1.4 * size /
    max size; edge penwidth = 0.3 + 4.7 * weight / max weight.  Layout is
    left to the renderer.
    """
    if fmt == "json":
        jsonio.dump(landscape.to_dict(), path)
        return
    if fmt != "dot":
        raise ValueError(f"unknown landscape export format: {fmt}")

    sizes = [s for _, s in landscape.factors]
    max_size = max(sizes) if sizes and max(sizes) > 0 else 1.0
    max_w = max((e.weight for e in landscape.edges), default=0.0)
    max_w = max_w if max_w > 0 else 1.0
    lines = ["graph disease_landscape {", "  node [fontsize=10];"]
    for fid, size in landscape.factors:
        width = 0.6 + 1.4 * size / max_size
        lines.append(
            f'  factor_{fid} [shape=circle, label="factor {fid}\\n{size:.3f} bits", '
            f"width={width:.3f}, fixedsize=true];"
        )
    for name in landscape.diseases:
        lines.append(f"  {_dot_escape(name)} [shape=box];")
    for e in landscape.edges:
        pen = 0.3 + 4.7 * e.weight / max_w
        lines.append(
            f"  factor_{e.factor} -- {_dot_escape(e.disease)} [penwidth={pen:.3f}];"
        )
    lines.append("}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_landscape(path) -> DiseaseLandscape:
    return DiseaseLandscape.from_dict(jsonio.load(path))
