use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::imgcore::Rect;

/// One weighted rectangle of a Haar feature, in base-window coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureRect {
    pub rect: Rect,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HaarFeature {
    pub rects: Vec<FeatureRect>,
    /// Always false for accepted models; kept so callers can see what was parsed.
    pub tilted: bool,
}

/// Decision stump: `left_val` when the normalized feature is below `threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakClassifier {
    pub feature: HaarFeature,
    pub threshold: f64,
    pub left_val: f64,
    pub right_val: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeStage {
    pub weak: Vec<WeakClassifier>,
    pub stage_threshold: f64,
}

/// Boosted Haar cascade, immutable after parsing.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeModel {
    pub base_width: usize,
    pub base_height: usize,
    pub stages: Vec<CascadeStage>,
    /// Non-fatal findings, e.g. features whose weighted areas do not cancel.
    pub warnings: Vec<String>,
}

impl CascadeModel {
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        parse_cascade(&text)
    }

    pub fn weak_count(&self) -> usize {
        self.stages.iter().map(|s| s.weak.len()).sum()
    }
}

fn model_err(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Result<Node<'a, 'i>> {
    node.children()
        .find(|c| c.has_tag_name(name))
        .ok_or_else(|| model_err(format!("<{}> has no <{name}>", node.tag_name().name())))
}

fn items<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|c| c.has_tag_name("_"))
}

fn text<'a>(node: Node<'a, '_>) -> &'a str {
    node.text().unwrap_or("").trim()
}

fn numbers(node: Node<'_, '_>) -> Result<Vec<f64>> {
    text(node)
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| model_err(format!("bad number {t:?}"))))
        .collect()
}

fn scalar<T: std::str::FromStr>(node: Node<'_, '_>, name: &str) -> Result<T> {
    let n = child(node, name)?;
    text(n).parse().map_err(|_| model_err(format!("<{name}> is not a valid value: {:?}", text(n))))
}

/// Parses the "new-style" boosted cascade XML (`opencv_storage/cascade`,
/// stageType BOOST, featureType HAAR, stump weak classifiers, upright features).
pub fn parse_cascade(xml: &str) -> Result<CascadeModel> {
    let doc = Document::parse(xml).map_err(|e| model_err(format!("malformed XML: {e}")))?;
    let root = doc.root_element();
    if !root.has_tag_name("opencv_storage") {
        return Err(model_err(format!("unexpected root <{}>", root.tag_name().name())));
    }
    let cascade = root
        .children()
        .find(|c| c.is_element() && c.children().any(|g| g.has_tag_name("stageType")))
        .ok_or_else(|| model_err("no new-style cascade node (old-style models are not supported)"))?;

    let stage_type: String = scalar(cascade, "stageType")?;
    if stage_type != "BOOST" {
        return Err(model_err(format!("unsupported stageType {stage_type}")));
    }
    let feature_type: String = scalar(cascade, "featureType")?;
    if feature_type != "HAAR" {
        return Err(model_err(format!("unsupported featureType {feature_type}")));
    }
    let base_width: usize = scalar(cascade, "width")?;
    let base_height: usize = scalar(cascade, "height")?;
    if base_width == 0 || base_height == 0 {
        return Err(model_err("zero-sized base window"));
    }

    let mut features = Vec::new();
    for f in items(child(cascade, "features")?) {
        let tilted = match f.children().find(|c| c.has_tag_name("tilted")) {
            Some(t) => text(t) != "0",
            None => false,
        };
        if tilted {
            return Err(model_err("tilted (45°) Haar features are not supported"));
        }
        let mut rects = Vec::new();
        for r in items(child(f, "rects")?) {
            let v = numbers(r)?;
            if v.len() != 5 {
                return Err(model_err(format!("feature rect needs 5 numbers, got {}", v.len())));
            }
            if v[..4].iter().any(|&c| c < 0.0 || c.fract() != 0.0) {
                return Err(model_err(format!("feature rect has non-integral geometry {v:?}")));
            }
            let rect = Rect::new(v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize)
                .map_err(|_| model_err(format!("empty feature rect {v:?}")))?;
            if !rect.fits_in(base_width, base_height) {
                return Err(model_err(format!("feature rect {rect:?} outside {base_width}x{base_height} base window")));
            }
            rects.push(FeatureRect { rect, weight: v[4] });
        }
        if !(2..=3).contains(&rects.len()) {
            return Err(model_err(format!("Haar feature with {} rects", rects.len())));
        }
        features.push(HaarFeature { rects, tilted });
    }

    let mut warnings = Vec::new();
    let mut stages = Vec::new();
    for (si, s) in items(child(cascade, "stages")?).enumerate() {
        let stage_threshold: f64 = scalar(s, "stageThreshold")?;
        let mut weak = Vec::new();
        for w in items(child(s, "weakClassifiers")?) {
            let nodes = numbers(child(w, "internalNodes")?)?;
            let leaves = numbers(child(w, "leafValues")?)?;
            if nodes.len() != 4 || leaves.len() != 2 {
                return Err(model_err(format!("stage {si}: only stump weak classifiers are supported")));
            }
            let idx = nodes[2];
            if idx < 0.0 || idx.fract() != 0.0 || idx as usize >= features.len() {
                return Err(model_err(format!("stage {si}: feature index {idx} out of range")));
            }
            let feature = features[idx as usize].clone();
            let balance: f64 = feature.rects.iter().map(|r| r.weight * r.rect.area() as f64).sum();
            if balance.abs() > 1e-6 {
                warnings.push(format!("feature {idx} weighted areas sum to {balance}"));
            }
            weak.push(WeakClassifier { feature, threshold: nodes[3], left_val: leaves[0], right_val: leaves[1] });
        }
        if weak.is_empty() {
            return Err(model_err(format!("stage {si} has no weak classifiers")));
        }
        stages.push(CascadeStage { weak, stage_threshold });
    }
    if stages.is_empty() {
        return Err(model_err("cascade has no stages"));
    }
    Ok(CascadeModel { base_width, base_height, stages, warnings })
}
