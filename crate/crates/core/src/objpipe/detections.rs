use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use super::ObjError;

/// Axis-aligned detection box in pixel corners.
#[derive(Debug, Clone, PartialEq)]
pub struct BBox {
    pub class_id: i64,
    pub label: String,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub confidence: f64,
}

impl BBox {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }

    pub fn overlaps_rows(&self, other: &BBox) -> bool {
        self.y_min < other.y_max && other.y_min < self.y_max
    }
}

/// Class id to name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap(pub BTreeMap<i64, String>);

impl Default for LabelMap {
    fn default() -> Self {
        Self(
            [(0, "crater"), (1, "rock"), (2, "artifact")]
                .into_iter()
                .map(|(k, v)| (k, v.to_string()))
                .collect(),
        )
    }
}

impl LabelMap {
    pub fn get(&self, id: i64) -> Option<&str> {
        self.0.get(&id).map(String::as_str)
    }
}

/// Lines of `id name`; blank lines and `#` comments are ignored.
pub fn parse_label_map(text: &str) -> Result<LabelMap, ObjError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (id, name) = (it.next(), it.next());
        let bad = |msg: &str| ObjError::MalformedLine { line: n + 1, msg: msg.into() };
        let id: i64 = id.and_then(|s| s.parse().ok()).ok_or_else(|| bad("expected integer class id"))?;
        let name = name.ok_or_else(|| bad("missing class name"))?;
        if it.next().is_some() {
            return Err(bad("expected `id name`"));
        }
        map.insert(id, name.to_string());
    }
    Ok(LabelMap(map))
}

pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap, ObjError> {
    parse_label_map(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionFormat {
    /// One `class cx cy w h [conf]` line per box, normalized to [0, 1].
    Yolo,
    /// COCO annotations with `bbox: [x, y, w, h]` in pixels.
    Coco,
}

impl std::str::FromStr for DetectionFormat {
    type Err = ObjError;
    fn from_str(s: &str) -> Result<Self, ObjError> {
        match s {
            "yolo" | "yolo-txt" => Ok(Self::Yolo),
            "coco" | "coco-json" => Ok(Self::Coco),
            other => Err(ObjError::UnknownFormat(other.into())),
        }
    }
}

impl DetectionFormat {
    /// `.json` is COCO, anything else YOLO.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Coco,
            _ => Self::Yolo,
        }
    }
}

pub fn load_detections(
    path: impl AsRef<Path>,
    format: DetectionFormat,
    width: usize,
    height: usize,
    labels: &LabelMap,
) -> Result<Vec<BBox>, ObjError> {
    let text = std::fs::read_to_string(path)?;
    match format {
        DetectionFormat::Yolo => parse_yolo(&text, width, height, labels),
        DetectionFormat::Coco => parse_coco(&text, width, height, labels),
    }
}

fn clamp_box(x0: f64, y0: f64, x1: f64, y1: f64, w: usize, h: usize) -> (f64, f64, f64, f64) {
    let (w, h) = (w as f64, h as f64);
    (x0.clamp(0.0, w), y0.clamp(0.0, h), x1.clamp(0.0, w), y1.clamp(0.0, h))
}

pub fn parse_yolo(text: &str, width: usize, height: usize, labels: &LabelMap) -> Result<Vec<BBox>, ObjError> {
    if width == 0 || height == 0 {
        return Err(ObjError::BadImageDims);
    }
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |msg: String| ObjError::MalformedLine { line, msg };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if !(5..=6).contains(&fields.len()) {
            return Err(bad(format!("expected 5 or 6 fields, found {}", fields.len())));
        }
        let class_id: i64 = fields[0].parse().map_err(|_| bad(format!("bad class id {:?}", fields[0])))?;
        let mut vals = [0.0f64; 5];
        for (k, f) in fields[1..].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| bad(format!("bad number {f:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(ObjError::OutOfRangeCoordinate { line, value: v });
            }
            vals[k] = v;
        }
        let [cx, cy, bw, bh, conf] = vals;
        let confidence = if fields.len() == 6 { conf } else { 1.0 };
        if bw <= 0.0 || bh <= 0.0 {
            return Err(bad("degenerate box (zero width or height)".into()));
        }
        let label = labels.get(class_id).ok_or(ObjError::UnknownClassId { line, id: class_id })?;
        let (w, h) = (width as f64, height as f64);
        let (x_min, y_min, x_max, y_max) = clamp_box(
            (cx - bw / 2.0) * w,
            (cy - bh / 2.0) * h,
            (cx + bw / 2.0) * w,
            (cy + bh / 2.0) * h,
            width,
            height,
        );
        if x_min >= x_max || y_min >= y_max {
            return Err(bad("box lies outside the image".into()));
        }
        out.push(BBox {
            class_id,
            label: label.to_string(),
            x_min,
            y_min,
            x_max,
            y_max,
            confidence,
        });
    }
    Ok(out)
}

/// Accepts a full COCO document (boxes from `annotations`) or a bare array
/// of annotation/result objects. `line` in errors is the annotation index.
pub fn parse_coco(text: &str, width: usize, height: usize, labels: &LabelMap) -> Result<Vec<BBox>, ObjError> {
    if width == 0 || height == 0 {
        return Err(ObjError::BadImageDims);
    }
    let doc: Value = serde_json::from_str(text).map_err(|e| ObjError::Json(e.to_string()))?;
    let anns = match &doc {
        Value::Array(a) => a,
        Value::Object(o) => match o.get("annotations") {
            Some(Value::Array(a)) => a,
            _ => return Err(ObjError::Json("missing `annotations` array".into())),
        },
        _ => return Err(ObjError::Json("expected an object or array".into())),
    };
    let mut out = Vec::with_capacity(anns.len());
    for (k, ann) in anns.iter().enumerate() {
        let bad = |msg: &str| ObjError::MalformedLine { line: k, msg: msg.into() };
        let class_id = ann
            .get("category_id")
            .and_then(Value::as_i64)
            .ok_or_else(|| bad("missing integer category_id"))?;
        let bbox: Vec<f64> = ann
            .get("bbox")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .ok_or_else(|| bad("missing bbox"))?;
        let [x, y, bw, bh] = bbox[..] else {
            return Err(bad("bbox must hold four numbers"));
        };
        if !(bw > 0.0 && bh > 0.0) {
            return Err(bad("degenerate box (zero width or height)"));
        }
        let confidence = ann.get("score").and_then(Value::as_f64).unwrap_or(1.0);
        let label = labels.get(class_id).ok_or(ObjError::UnknownClassId { line: k, id: class_id })?;
        let (x_min, y_min, x_max, y_max) = clamp_box(x, y, x + bw, y + bh, width, height);
        if x_min >= x_max || y_min >= y_max {
            return Err(bad("box lies outside the image"));
        }
        out.push(BBox {
            class_id,
            label: label.to_string(),
            x_min,
            y_min,
            x_max,
            y_max,
            confidence,
        });
    }
    Ok(out)
}
