//! Large-scale invariants of lazily generated, locally finite graphs: ends
//! profiles, ε-equivalence certificates for coarse sequences, the
//! concatenation witness, and finite-horizon component threads.

pub mod coarse;
pub mod components;
pub mod epsilon;
pub mod error;
pub mod fixtures;
pub mod maps;
pub mod point;
pub mod sequences;
pub mod spaces;
pub mod witness;

pub use coarse::{BoundedRegion, Dist, Entourage, Window, INF};
pub use components::{
    chain_between, component_threads, end_profile, k_components, Chain, Classification, ComponentEngine,
    ComponentPartition, EndProfile, EngineChoice, ThreadSystem,
};
pub use epsilon::{
    epsilon_equivalent, epsilon_search_k, verify_certificate, EpsCertificate, EpsOptions, EpsRefutation, EpsVerdict,
    VerifyReport,
};
pub use error::{Error, Result};
pub use maps::{are_close, check_coarse, induced_end_map, CoarseMapSpec, EndMap, MapRule};
pub use point::Point;
pub use sequences::{is_subsequence, validate_coarse, CoarseSequence, SeqRule};
pub use spaces::{ball, parse_descriptor, sphere, Limits, SpaceDescriptor};
pub use witness::{build_witness, verify_witness, Witness};
