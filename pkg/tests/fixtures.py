"""Hand-built diagrams shared by several test modules."""

from kerrio.contractions import WickKind
from kerrio.diagrams import Diagram, Edge, Leg
from kerrio.model import LegKind as L

R, A, K, LOOP = WickKind.RETARDED, WickKind.ADVANCED, WickKind.KELDYSH, WickKind.LOOP

# one vertex: drive photon in, detected photon out, thermal loop
LOOP_MEAN = Diagram(1, (Edge(0, 0, LOOP),), (Leg(0, L.SOURCE_PHOTON), Leg(0, L.DETECTOR_PHOTON, "p0")))

# one vertex: two drive photons, one drive anti-photon, one detected photon
TREE_MEAN = Diagram(1, (), (Leg(0, L.SOURCE_PHOTON), Leg(0, L.SOURCE_PHOTON), Leg(0, L.SOURCE_ANTIPHOTON),
                        Leg(0, L.DETECTOR_PHOTON, "p0")))


def kr_pair(labels=(None, None)):
    """Second-order <<b b>> diagram joined by one G^K and one G^R line."""
    return Diagram(2, (Edge(1, 0, K), Edge(0, 1, R)),
                   (Leg(0, L.SOURCE_PHOTON), Leg(0, L.DETECTOR_PHOTON_K, labels[0]),
                    Leg(1, L.SOURCE_PHOTON), Leg(1, L.DETECTOR_PHOTON, labels[1])))


# two vertices joined by two parallel G^K lines
PARALLEL_K = Diagram(2, (Edge(0, 1, K), Edge(0, 1, K)),
                     (Leg(0, L.SOURCE_PHOTON), Leg(0, L.DETECTOR_ANTIPHOTON, "d0"),
                      Leg(1, L.SOURCE_ANTIPHOTON), Leg(1, L.DETECTOR_PHOTON, "p0")))

# G^R up and G^R down: dashed ends sit on different vertices
RULE4 = Diagram(2, (Edge(0, 1, R), Edge(1, 0, R)),
                (Leg(0, L.SOURCE_PHOTON), Leg(0, L.SOURCE_ANTIPHOTON),
                 Leg(1, L.DETECTOR_PHOTON, "p0"), Leg(1, L.DETECTOR_ANTIPHOTON, "d0")))
