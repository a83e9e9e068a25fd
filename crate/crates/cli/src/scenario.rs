//! Simulation regimes and their default sizes.

use std::fmt;

use clap::{Args, ValueEnum};
use ffs::simgen::{gen_case1, gen_case2_network, gen_case3_tensor, gen_cluster_case, gen_two_movers};
use ffs::SyntheticDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    /// Gaussian dynamic matrix.
    Case1,
    /// Binary dynamic network.
    Case2,
    /// Gaussian CP tensor.
    Case3,
    /// Corner clusters with membership changes.
    Cluster,
    /// Network where only subjects 1 and 2 move.
    TwoMovers,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Case1 => "case1",
            ScenarioKind::Case2 => "case2",
            ScenarioKind::Case3 => "case3",
            ScenarioKind::Cluster => "cluster",
            ScenarioKind::TwoMovers => "two-movers",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Size flags shared by `simulate` and `benchmark`; unset values take the scenario default.
#[derive(Debug, Clone, Default, Args)]
pub struct SizeArgs {
    /// Rows (case1) or nodes (networks).
    #[arg(long)]
    pub n: Option<usize>,
    /// Columns (case1).
    #[arg(long)]
    pub p: Option<usize>,
    /// Tensor dimensions, comma separated (case3).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Number of time points.
    #[arg(short = 'T', long = "len")]
    pub len: Option<usize>,
    /// Latent dimension of the truth (case1).
    #[arg(long = "true-d")]
    pub true_d: Option<usize>,
    /// Probability that a transition is zero.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Noise standard deviation (Gaussian cases).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Probability of keeping the cluster corner (cluster).
    #[arg(long = "p-stay")]
    pub p_stay: Option<f64>,
}

/// A scenario with every size resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub dims: Vec<usize>,
    pub len: usize,
    pub true_d: usize,
    pub rho: f64,
    pub sigma: f64,
    pub p_stay: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, args: &SizeArgs) -> Self {
        let default_dims = match kind {
            ScenarioKind::Case1 => vec![20, 20],
            ScenarioKind::Case2 => vec![20, 20],
            ScenarioKind::Case3 => vec![10, 10, 10],
            ScenarioKind::Cluster => vec![40, 40],
            ScenarioKind::TwoMovers => vec![10, 10],
        };
        let dims = match kind {
            ScenarioKind::Case3 => args.dims.clone().unwrap_or(default_dims),
            ScenarioKind::Case1 => vec![args.n.unwrap_or(default_dims[0]), args.p.unwrap_or(default_dims[1])],
            _ => {
                let n = args.n.unwrap_or(default_dims[0]);
                vec![n, n]
            }
        };
        let rho = args.rho.unwrap_or(match kind {
            ScenarioKind::Case2 => 0.9,
            ScenarioKind::Case3 => 0.99,
            _ => 0.95,
        });
        Scenario {
            kind,
            dims,
            len: args.len.unwrap_or(100),
            true_d: args.true_d.unwrap_or(2),
            rho,
            sigma: args.sigma.unwrap_or(0.3),
            p_stay: args.p_stay.unwrap_or(0.95),
        }
    }

    /// Defaults of every size flag.
    pub fn default_for(kind: ScenarioKind) -> Self {
        Self::new(kind, &SizeArgs::default())
    }

    pub fn generate(&self, seed: u64) -> ffs::Result<SyntheticDataset> {
        match self.kind {
            ScenarioKind::Case1 => {
                gen_case1(self.dims[0], self.dims[1], self.len, self.true_d, self.rho, self.sigma, seed)
            }
            ScenarioKind::Case2 => gen_case2_network(self.dims[0], self.len, self.rho, seed),
            ScenarioKind::Case3 => {
                if self.dims.len() != 3 {
                    return Err(ffs::FfsError::InvalidArgument(format!(
                        "case3 needs three dims, got {:?}",
                        self.dims
                    )));
                }
                gen_case3_tensor(self.dims[0], self.dims[1], self.dims[2], self.len, self.rho, self.sigma, seed)
            }
            ScenarioKind::Cluster => gen_cluster_case(self.dims[0], self.len, self.p_stay, seed),
            ScenarioKind::TwoMovers => gen_two_movers(self.dims[0], self.len, seed),
        }
    }
}
