//! Quarter-plane lattice walk enumeration.
//!
//! For a set of small steps S ⊆ {−1,0,1}²∖{0} and a weight z, the
//! trivariate series Q(x,y;z) = Σ q(i,j;n) x^i y^j zⁿ counts quadrant-
//! confined paths. This crate classifies the model (group order,
//! covariance, singularity, predicted gluing-function nature), builds
//! the elliptic uniformization of the kernel curve, constructs
//! conformal gluing functions (general elliptic form plus the
//! finite-group closed forms), and evaluates Q numerically: by the
//! boundary-integral representation for non-singular models and by the
//! iterated-kernel series for the five singular ones. An exact
//! big-integer counting oracle with rigorous tail bounds backs every
//! analytic output.

pub mod cgf;
pub mod elliptic;
pub mod error;
pub mod gfeval;
pub mod kernel;
pub mod oracle;
pub mod poly;
pub mod quad;
pub mod stepset;

pub use cgf::{BranchConvention, CgfEvaluator, CgfValue, ClosedFormKind};
pub use elliptic::{
    build_uniformization, carlson_rf, lattice_division_sum, wp_eval, wp_half_argument, FMap,
    Uniformization, WeierstrassP,
};
pub use error::{Error, Result};
pub use gfeval::{
    eval_singular_boundary, eval_singular_q, singular_contraction_holds, GFValue, Method,
    Pipeline, ResidualReport,
};
pub use kernel::{
    branch_eval, branch_points, branch_roots, build_kernel, sample_critical_curve, BranchEval,
    BranchPoints, CurveRegion, CutSide, KernelData, Side,
};
pub use oracle::{count, CountTable, SumMode};
pub use stepset::{
    classify, group_order, parse_step_set, registry, registry_lookup, CgfNature, Classification,
    Direction, GroupOrder, StepSet,
};
