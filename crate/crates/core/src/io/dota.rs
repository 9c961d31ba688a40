//! DOTA annotation text and DOTA-style detection lines.
//!
//! Annotation lines are `x1 y1 x2 y2 x3 y3 x4 y4 category [difficult]`.
//! `imagesource:` and `gsd:` header lines are skipped. An optional
//! `imagesize:W H` header carries the image dimensions.
//!
//! Detection lines are `category score x1 y1 x2 y2 x3 y3 x4 y4`.

use std::fmt::Write as _;

use crate::encoder::{GroundTruthScene, SceneBox};
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::geometry::{Detection, OrientedBox, QuadBox};

/// Category names; the channel of a category is its line index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    names: Vec<String>,
}

impl CategoryTable {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidParameter("empty category table".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(char::is_whitespace) {
                return Err(Error::InvalidParameter(format!("bad category name {n:?}")));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidParameter(format!("duplicate category {n:?}")));
            }
        }
        Ok(Self { names })
    }

    /// One name per non-blank line.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class_id: usize) -> Option<&str> {
        self.names.get(class_id).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownCategory {
                name: name.to_string(),
                known: self.names.join(", "),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub quad: QuadBox,
    /// Minimum-area rectangle of the quad's corners.
    pub bbox: OrientedBox,
    pub class_id: usize,
    pub difficult: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneFile {
    pub image_size: Option<(usize, usize)>,
    pub annotations: Vec<Annotation>,
}

impl SceneFile {
    /// Builds an encoder scene. Without an `imagesize:` header the image is
    /// taken to be the smallest origin-anchored rectangle holding every quad.
    pub fn to_scene(&self, downsample: usize, num_classes: usize) -> Result<GroundTruthScene> {
        let (w, h) = self.image_size.unwrap_or_else(|| self.extent());
        let scene = GroundTruthScene::new(w, h, downsample, num_classes).with_boxes(
            self.annotations.iter().map(|a| SceneBox {
                bbox: a.bbox,
                class_id: a.class_id,
            }),
        );
        scene.validate()?;
        Ok(scene)
    }

    pub fn ground_truth(&self) -> Vec<GroundTruth> {
        self.annotations
            .iter()
            .map(|a| GroundTruth {
                bbox: a.bbox,
                class_id: a.class_id,
                difficult: a.difficult,
            })
            .collect()
    }

    fn extent(&self) -> (usize, usize) {
        let (mut w, mut h) = (1.0f64, 1.0f64);
        for a in &self.annotations {
            for p in a.quad.vertices() {
                w = w.max(p.x.ceil());
                h = h.max(p.y.ceil());
            }
        }
        (w as usize, h as usize)
    }

    /// Annotations of an encoder scene, with the image size recorded.
    pub fn from_scene(scene: &GroundTruthScene) -> Self {
        Self {
            image_size: Some((scene.image_width, scene.image_height)),
            annotations: scene
                .boxes
                .iter()
                .map(|b| {
                    let bbox = b.bbox.canonicalize();
                    Annotation {
                        quad: bbox.to_corners(),
                        bbox,
                        class_id: b.class_id,
                        difficult: false,
                    }
                })
                .collect(),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_coords(tokens: &[&str], line: usize) -> Result<[f64; 8]> {
    let mut c = [0.0; 8];
    for (slot, tok) in c.iter_mut().zip(tokens) {
        *slot = tok
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_err(line, format!("bad coordinate {tok:?}")))?;
    }
    Ok(c)
}

fn is_header(line: &str) -> bool {
    ["imagesource:", "gsd:", "imagesize:"]
        .iter()
        .any(|h| line.starts_with(h))
}

pub fn parse_dota(text: &str, categories: &CategoryTable) -> Result<SceneFile> {
    let mut scene = SceneFile::default();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("imagesize:") {
            let dims: Vec<usize> = rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(lineno, format!("bad image size {t:?}"))))
                .collect::<Result<_>>()?;
            match dims[..] {
                [w, h] if w > 0 && h > 0 => scene.image_size = Some((w, h)),
                _ => return Err(parse_err(lineno, "imagesize needs two positive integers")),
            }
            continue;
        }
        if is_header(line) {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !(9..=10).contains(&tokens.len()) {
            return Err(parse_err(
                lineno,
                format!("expected 8 coordinates, a category and an optional difficult flag, got {} fields", tokens.len()),
            ));
        }
        let coords = parse_coords(&tokens[..8], lineno)?;
        let class_id = categories.index_of(tokens[8])?;
        let difficult = match tokens.get(9) {
            None | Some(&"0") => false,
            Some(&"1") => true,
            Some(t) => return Err(parse_err(lineno, format!("difficult flag must be 0 or 1, got {t:?}"))),
        };
        let quad = QuadBox::from_flat(coords).map_err(|e| parse_err(lineno, e.to_string()))?;
        scene.annotations.push(Annotation {
            bbox: quad.to_oriented(),
            quad,
            class_id,
            difficult,
        });
    }
    Ok(scene)
}

/// Writes the scene's boxes as the corners of their canonical rectangles.
pub fn serialize_dota(scene: &SceneFile, categories: &CategoryTable) -> Result<String> {
    let mut out = String::new();
    if let Some((w, h)) = scene.image_size {
        writeln!(out, "imagesize:{w} {h}").unwrap();
    }
    for a in &scene.annotations {
        let name = category_name(categories, a.class_id)?;
        for c in a.bbox.to_corners().to_flat() {
            write!(out, "{c} ").unwrap();
        }
        writeln!(out, "{name} {}", u8::from(a.difficult)).unwrap();
    }
    Ok(out)
}

fn category_name(categories: &CategoryTable, class_id: usize) -> Result<&str> {
    categories.name(class_id).ok_or(Error::ChannelOutOfRange {
        class_id,
        channels: categories.len(),
    })
}

/// One detection per line, in the given order. Coordinates are multiplied
/// by `scale` first (the downsample rate, to go back to image pixels).
pub fn format_detections(dets: &[Detection], categories: &CategoryTable, scale: f64) -> Result<String> {
    let mut out = String::new();
    for d in dets {
        let name = category_name(categories, d.class_id)?;
        write!(out, "{name} {}", d.score).unwrap();
        for c in d.bbox.scaled(scale).to_corners().to_flat() {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_detections(text: &str, categories: &CategoryTable) -> Result<Vec<Detection>> {
    let mut dets = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 10 {
            return Err(parse_err(
                lineno,
                format!("expected category, score and 8 coordinates, got {} fields", tokens.len()),
            ));
        }
        let class_id = categories.index_of(tokens[0])?;
        let score: f64 = tokens[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad score {:?}", tokens[1])))?;
        let quad = QuadBox::from_flat(parse_coords(&tokens[2..], lineno)?)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        let det = Detection::new(quad.to_oriented(), score, class_id)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        dets.push(det);
    }
    Ok(dets)
}
