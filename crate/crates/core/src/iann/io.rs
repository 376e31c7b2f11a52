//! Model file format: JSON with the structure kind, ordering or groups,
//! combination weights, layer specs, weights as nested arrays, and training
//! metadata. Values round-trip exactly (shortest-round-trip float encoding),
//! so a reloaded model reproduces predictions bit for bit.

use super::model::{IannModel, LatentStats, ModelStructure, TrainMeta};
use super::net::{Activation, DenseLayer, Mlp};
use super::IannError;
use crate::blackbox::Domain;
use serde::{Deserialize, Serialize};

pub const MODEL_FORMAT: &str = "iann-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    /// `w[i][o]`: weight from input `i` to unit `o`.
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    /// `None` encodes the linear output layer.
    activation: Option<Activation>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetFile {
    layers: Vec<LayerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum StructureFile {
    FirstLevel {
        /// 1-based singled-out input.
        singled_out: usize,
        h_net: NetFile,
        g_net: NetFile,
    },
    Ovh {
        /// 1-based input ordering `j_1..j_d`.
        order: Vec<usize>,
        nets: Vec<NetFile>,
    },
    Dash {
        /// 1-based member indices per group.
        groups: Vec<Vec<usize>>,
        beta: Vec<Vec<f64>>,
        /// 1-based positions into `groups`.
        order: Vec<usize>,
        nets: Vec<NetFile>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    domain: Vec<(f64, f64)>,
    structure: StructureFile,
    axis2_stats: Vec<LatentStats>,
    meta: Option<TrainMeta>,
}

fn net_to_file(net: &Mlp) -> NetFile {
    NetFile {
        layers: net
            .layers
            .iter()
            .map(|l| LayerFile {
                w: (0..l.in_dim)
                    .map(|i| l.w[i * l.out_dim..(i + 1) * l.out_dim].to_vec())
                    .collect(),
                b: l.b.clone(),
                activation: l.activation,
            })
            .collect(),
    }
}

fn net_from_file(file: NetFile) -> Result<Mlp, IannError> {
    let mut layers = Vec::with_capacity(file.layers.len());
    let mut expected_in: Option<usize> = None;
    for (k, lf) in file.layers.into_iter().enumerate() {
        let in_dim = lf.w.len();
        if in_dim == 0 {
            return Err(IannError::ModelFile(format!("layer {k} has no inputs")));
        }
        let out_dim = lf.w[0].len();
        if out_dim == 0 || lf.w.iter().any(|row| row.len() != out_dim) {
            return Err(IannError::ModelFile(format!("layer {k} weight rows are ragged")));
        }
        if lf.b.len() != out_dim {
            return Err(IannError::ModelFile(format!(
                "layer {k} has {} biases for {out_dim} units",
                lf.b.len()
            )));
        }
        if let Some(e) = expected_in {
            if e != in_dim {
                return Err(IannError::ModelFile(format!(
                    "layer {k} expects {in_dim} inputs but the previous layer outputs {e}"
                )));
            }
        }
        expected_in = Some(out_dim);
        layers.push(DenseLayer {
            in_dim,
            out_dim,
            w: lf.w.into_iter().flatten().collect(),
            b: lf.b,
            activation: lf.activation,
        });
    }
    if layers.is_empty() {
        return Err(IannError::ModelFile("net has no layers".into()));
    }
    if layers.last().unwrap().out_dim != 1 {
        return Err(IannError::ModelFile("output layer must have one unit".into()));
    }
    Ok(Mlp { layers })
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|&x| x + 1).collect()
}

fn zero_based(v: Vec<usize>, bound: usize, what: &str) -> Result<Vec<usize>, IannError> {
    v.into_iter()
        .map(|x| {
            if x == 0 || x > bound {
                Err(IannError::ModelFile(format!(
                    "{what} index {x} out of range 1..={bound}"
                )))
            } else {
                Ok(x - 1)
            }
        })
        .collect()
}

pub fn model_to_json(model: &IannModel) -> String {
    let structure = match &model.structure {
        ModelStructure::FirstLevel {
            singled_out,
            h_net,
            g_net,
        } => StructureFile::FirstLevel {
            singled_out: singled_out + 1,
            h_net: net_to_file(h_net),
            g_net: net_to_file(g_net),
        },
        ModelStructure::Ovh { order, level_nets } => StructureFile::Ovh {
            order: one_based(order),
            nets: level_nets.iter().map(net_to_file).collect(),
        },
        ModelStructure::Dash {
            groups,
            beta,
            order,
            level_nets,
        } => StructureFile::Dash {
            groups: groups.iter().map(|g| one_based(g)).collect(),
            beta: beta.clone(),
            order: one_based(order),
            nets: level_nets.iter().map(net_to_file).collect(),
        },
    };
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        domain: model.domain.intervals.clone(),
        structure,
        axis2_stats: model.axis2_stats.clone(),
        meta: model.meta.clone(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<IannModel, IannError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| IannError::ModelFile(e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(IannError::ModelFile(format!(
            "not a model file (format `{}`)",
            file.format
        )));
    }
    if file.version != MODEL_VERSION {
        return Err(IannError::ModelFile(format!(
            "unsupported model version {}",
            file.version
        )));
    }
    let domain = Domain::new(file.domain).map_err(|e| IannError::ModelFile(e.to_string()))?;
    let d = domain.dim();
    let structure = match file.structure {
        StructureFile::FirstLevel {
            singled_out,
            h_net,
            g_net,
        } => {
            if singled_out == 0 || singled_out > d {
                return Err(IannError::ModelFile(format!(
                    "singled_out {singled_out} out of range 1..={d}"
                )));
            }
            let h_net = net_from_file(h_net)?;
            let g_net = net_from_file(g_net)?;
            if h_net.input_dim() != d - 1 || g_net.input_dim() != 2 {
                return Err(IannError::ModelFile("first-level net shapes mismatch".into()));
            }
            ModelStructure::FirstLevel {
                singled_out: singled_out - 1,
                h_net,
                g_net,
            }
        }
        StructureFile::Ovh { order, nets } => {
            let order = zero_based(order, d, "order")?;
            if sorted(&order) != (0..d).collect::<Vec<_>>() {
                return Err(IannError::ModelFile("order is not a permutation".into()));
            }
            let nets = nets
                .into_iter()
                .map(net_from_file)
                .collect::<Result<Vec<_>, _>>()?;
            if nets.len() != d - 1 || nets.iter().any(|n| n.input_dim() != 2) {
                return Err(IannError::ModelFile("level net shapes mismatch".into()));
            }
            ModelStructure::Ovh { order, level_nets: nets }
        }
        StructureFile::Dash {
            groups,
            beta,
            order,
            nets,
        } => {
            let groups = groups
                .into_iter()
                .map(|g| zero_based(g, d, "group member"))
                .collect::<Result<Vec<_>, _>>()?;
            let p = groups.len();
            let mut members: Vec<usize> = groups.iter().flatten().copied().collect();
            members.sort_unstable();
            if members != (0..d).collect::<Vec<_>>() {
                return Err(IannError::ModelFile(
                    "groups must partition the inputs".into(),
                ));
            }
            if beta.len() != p || beta.iter().zip(&groups).any(|(b, g)| b.len() != g.len()) {
                return Err(IannError::ModelFile("beta shapes mismatch".into()));
            }
            let order = zero_based(order, p, "group order")?;
            if sorted(&order) != (0..p).collect::<Vec<_>>() {
                return Err(IannError::ModelFile("group order is not a permutation".into()));
            }
            let nets = nets
                .into_iter()
                .map(net_from_file)
                .collect::<Result<Vec<_>, _>>()?;
            if nets.len() != p - 1 || nets.iter().any(|n| n.input_dim() != 2) {
                return Err(IannError::ModelFile("level net shapes mismatch".into()));
            }
            ModelStructure::Dash {
                groups,
                beta,
                order,
                level_nets: nets,
            }
        }
    };
    Ok(IannModel {
        domain,
        structure,
        axis2_stats: file.axis2_stats,
        meta: file.meta,
    })
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}
