//! The worked-example graphs: the questionnaire DAG, the six panels of the
//! projection examples, and the IDA example CPDAG with its five maxPDAGs.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use crate::io::parse_graph;

/// A named example graph with its treatment and outcome roles.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: Graph,
    pub x: NodeSet,
    pub y: NodeSet,
}

struct Spec {
    name: &'static str,
    text: &'static str,
    x: &'static str,
    y: &'static str,
}

const SSQ_DAG: &str = "\
class: dag
ALN -> DET
AFF -> ALN
SAN -> AFF
SAN -> AIS
SAN -> APA
SAN -> ALN
SAN -> CDR
CDR -> DET
AFF -> APA
AIS -> AFF
AFF -> CDR
ALN -> APA
ALN -> PER
ALN -> SUS
ALN -> FTW
AIS -> SUS
AIS -> EGC
SUS -> HOS
EGC -> HOS
FTW -> EGC
SUS -> EGC
PER -> DET
SUS -> FTW
FTW -> DET
";

const FIG3_A: &str = "\
class: dag
V1 -> X
V2 -> X
V2 -> Y
X -> Y
";

const FIG3_B: &str = "\
class: dag
X1 -> V1
V2 -> Y
V2 -> V1
Y -> X2
";

const FIG3_C: &str = "\
class: dag
V1 -> X
V2 -> X
V2 -> V3
V4 -> Y
X -> V3
V3 -> Y
";

const FIG3_D: &str = "\
class: dag
V1 -> X
V2 -> X
X -> V3
V2 -> Y
V4 -> V5
V5 -> V6
V7 -> Y
Y -> V8
X -> V5
V5 -> Y
";

const FIG3_E: &str = "\
class: dag
X -> VE
VE -> Y1
VE -> Y2
";

const FIG3_F: &str = "\
class: dag
V1 -> X1
X1 -> V2
V2 -> X2
X2 -> Y
X1 -> X2
V2 -> Y
";

const FIG4_CPDAG: &str = "\
class: cpdag
X -- V1
X -- V4
X -- V3
V1 -- V2
V1 -- V3
V2 -- V3
V3 -- V5
V2 -> Y
V3 -> Y
V5 -> Y
";

const FIG4_B: &str = "\
class: maxpdag
V1 -> X
X -> V4
X -> V3
V1 -> V2
V1 -> V3
V3 -> V2
V3 -> V5
V2 -> Y
V3 -> Y
V5 -> Y
";

const FIG4_C: &str = "\
class: maxpdag
V1 -> X
X -> V4
V3 -> X
V1 -- V2
V1 -- V3
V2 -- V3
V3 -- V5
V2 -> Y
V3 -> Y
V5 -> Y
";

const FIG4_D: &str = "\
class: maxpdag
X -> V1
V4 -> X
X -> V3
V1 -> V2
V1 -- V3
V3 -> V2
V3 -> V5
V2 -> Y
V3 -> Y
V5 -> Y
";

const FIG4_E: &str = "\
class: maxpdag
X -> V1
X -> V4
X -> V3
V1 -> V2
V1 -- V3
V3 -> V2
V3 -> V5
V2 -> Y
V3 -> Y
V5 -> Y
";

const FIG4_F: &str = "\
class: maxpdag
X -> V1
X -> V4
V3 -> X
V1 -> V2
V3 -> V1
V3 -> V2
V3 -- V5
V2 -> Y
V3 -> Y
V5 -> Y
";

const SPECS: &[Spec] = &[
    Spec { name: "SSQ-DAG", text: SSQ_DAG, x: "ALN", y: "DET" },
    Spec { name: "FIG3-A", text: FIG3_A, x: "X", y: "Y" },
    Spec { name: "FIG3-B", text: FIG3_B, x: "X1,X2", y: "Y" },
    Spec { name: "FIG3-C", text: FIG3_C, x: "X", y: "Y" },
    Spec { name: "FIG3-D", text: FIG3_D, x: "X", y: "Y" },
    Spec { name: "FIG3-E", text: FIG3_E, x: "X", y: "Y1,Y2" },
    Spec { name: "FIG3-F", text: FIG3_F, x: "X1,X2", y: "Y" },
    Spec { name: "FIG4-CPDAG", text: FIG4_CPDAG, x: "X", y: "Y" },
    Spec { name: "FIG4-B", text: FIG4_B, x: "X", y: "Y" },
    Spec { name: "FIG4-C", text: FIG4_C, x: "X", y: "Y" },
    Spec { name: "FIG4-D", text: FIG4_D, x: "X", y: "Y" },
    Spec { name: "FIG4-E", text: FIG4_E, x: "X", y: "Y" },
    Spec { name: "FIG4-F", text: FIG4_F, x: "X", y: "Y" },
];

/// Fixture names in a fixed order.
pub fn names() -> Vec<&'static str> {
    SPECS.iter().map(|s| s.name).collect()
}

/// The edge-list text of a fixture.
pub fn text(name: &str) -> Result<&'static str> {
    find(name).map(|s| s.text)
}

fn find(name: &str) -> Result<&'static Spec> {
    SPECS
        .iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::InvalidParameter(format!("unknown fixture `{name}`; known: {}", names().join(", "))))
}

/// Parses a fixture by name (case-insensitive).
pub fn get(name: &str) -> Result<Fixture> {
    let spec = find(name)?;
    let graph = parse_graph(spec.text)?;
    let x = graph.parse_set(spec.x)?;
    let y = graph.parse_set(spec.y)?;
    Ok(Fixture { name: spec.name, graph, x, y })
}
