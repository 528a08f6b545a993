use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Subcommand;
use serde_json::json;

use qmn_core::cumulants::{clique_support_from, expand, support_key, SupportSelection};
use qmn_core::decompose::{classify as classify_model, theorem4_decompose, DecomposeOptions};
use qmn_core::generators;
use qmn_core::graphs::Graph;
use qmn_core::io::{model_to_json, read_model};
use qmn_core::markov::{gibbs_capped, is_markov_network, MarkovOptions, PartitionMode};
use qmn_core::tensor::{logm_herm, random::rng};
use qmn_core::QmnError;

use crate::{CumulantSource, PartitionArg};

pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn verify_markov(
    path: &Path,
    beta: Option<f64>,
    tol: f64,
    partitions: PartitionArg,
    out: Option<&Path>,
    dot: Option<&Path>,
    cap: usize,
) -> Result<bool> {
    let mut model = read_model(path)?;
    if let Some(b) = beta {
        model.beta = b;
    }
    let rho = gibbs_capped(&model, cap)?;
    let mode = match partitions {
        PartitionArg::Spanning => PartitionMode::Spanning,
        PartitionArg::All => PartitionMode::All,
    };
    let report = is_markov_network(&rho, &model.graph, &MarkovOptions { tol, mode, parallel: true })?;
    emit(out, &report.to_json())?;
    if let Some(d) = dot {
        let worst = report.worst().map(|r| r.partition());
        emit(Some(d), &model.graph.to_dot(worst.as_ref()))?;
    }
    Ok(report.verdict.is_pass())
}

pub fn parse_edge(s: &str) -> Result<(u32, u32)> {
    let Some((a, b)) = s.split_once('-') else {
        bail!("edge must look like 1-2");
    };
    Ok((a.trim().parse()?, b.trim().parse()?))
}

pub fn cumulants(
    path: &Path,
    of: CumulantSource,
    max_support: Option<usize>,
    tol: f64,
    edges: Option<Vec<(u32, u32)>>,
    out: Option<&Path>,
    cap: usize,
) -> Result<bool> {
    let model = read_model(path)?;
    let graph = match edges {
        Some(e) => Graph::new(model.space.sites().iter().copied(), e)?,
        None => model.graph.clone(),
    };
    let h = match of {
        CumulantSource::Hamiltonian => model.hamiltonian(cap)?,
        CumulantSource::LogGibbs => logm_herm(&gibbs_capped(&model, cap)?.matrix)?,
    };
    let e = expand(&h, &model.space, SupportSelection::None)?;
    let limit = max_support.unwrap_or(usize::MAX);
    let listed: Vec<(Vec<u32>, f64)> = e.masses().into_iter().filter(|(s, _)| s.len() <= limit).collect();
    let kept: f64 = listed.iter().map(|(_, m)| m).sum();
    let supports: serde_json::Map<String, serde_json::Value> =
        listed.iter().map(|(s, m)| (support_key(s), json!({ "hs_norm": m.sqrt() }))).collect();
    let cs = clique_support_from(&e, &graph, tol);
    let report = json!({
        "of": match of { CumulantSource::Hamiltonian => "hamiltonian", CumulantSource::LogGibbs => "log-gibbs" },
        "max_support": max_support,
        "source_norm": e.source_norm_sqr.sqrt(),
        "parseval_gap": (e.source_norm_sqr - kept).max(0.0),
        "supports": supports,
        "clique_support": cs,
    });
    emit(out, &serde_json::to_string_pretty(&report)?)?;
    Ok(cs.pass)
}

pub fn classify(path: &Path, tol: f64, out: Option<&Path>, dot: Option<&Path>, cap: usize) -> Result<bool> {
    let model = read_model(path)?;
    let c = classify_model(&model, tol, cap, &MarkovOptions::default())?;
    emit(out, &c.to_json())?;
    if let Some(d) = dot {
        let p = c.failing_partition.as_ref().map(|r| r.partition());
        emit(Some(d), &model.graph.to_dot(p.as_ref()))?;
    }
    Ok(true)
}

pub fn decompose(path: &Path, tol: f64, out: Option<&Path>, cert: Option<&Path>, cap: usize) -> Result<bool> {
    let model = read_model(path)?;
    let rho = gibbs_capped(&model, cap)?;
    match theorem4_decompose(&rho, &model.graph, &DecomposeOptions { tol, parallel: true }) {
        Ok(d) => {
            let c = d.certificate(tol);
            if let Some(o) = out {
                emit(Some(o), &model_to_json(&d.to_model()?))?;
            }
            emit(cert, &serde_json::to_string_pretty(&c)?)?;
            Ok(c.verdict == "pass")
        }
        Err(
            e @ (QmnError::NotTriangleFree(_)
            | QmnError::NotMarkov(_)
            | QmnError::DecompositionResidual { .. }
            | QmnError::PositivityViolation { .. }),
        ) => {
            let c = json!({ "residual": null, "max_commutator": null, "verdict": "fail", "error": e.to_string() });
            emit(cert, &serde_json::to_string_pretty(&c)?)?;
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Subcommand)]
pub enum Family {
    /// The five-site cell with four non-commuting triangle terms.
    Cell,
    /// Tiling of five-site cells.
    Tiling { rows: usize, cols: usize },
    /// Commuting Ising chain.
    Ising {
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
    },
    /// Chain with alternating XX and ZZ bonds.
    Xxzz { n: usize },
    /// Cluster-state chain.
    Cluster { n: usize },
    /// Random locally commuting model on a random graph.
    RandomCommuting {
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        edge_prob: f64,
    },
    /// Commuting model on a triangle-free graph with alternate composite sites
    /// (graph: path4, path5, cycle4, cycle6, star3, grid2x3).
    TriangleFree {
        graph: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn generate(family: Family, out: Option<&Path>) -> Result<bool> {
    let model = match family {
        Family::Cell => generators::five_site_cell(),
        Family::Tiling { rows, cols } => generators::cell_tiling(rows, cols),
        Family::Ising { n, j, h } => generators::ising_chain(n, j, h),
        Family::Xxzz { n } => generators::xxzz_chain(n),
        Family::Cluster { n } => generators::cluster_chain(n),
        Family::RandomCommuting { n, seed, edge_prob } => generators::random_commuting_model(&mut rng(seed), n, edge_prob, 1.0)?,
        Family::TriangleFree { graph, seed } => {
            let Some((_, g)) = generators::triangle_free_graphs().into_iter().find(|(n, _)| *n == graph) else {
                bail!("unknown graph `{graph}`");
            };
            let g: Graph = g;
            generators::triangle_free_model(&mut rng(seed), &g, &generators::alternate_composite(&g), 0.4)?
        }
    };
    emit(out, &model_to_json(&model))?;
    Ok(true)
}
