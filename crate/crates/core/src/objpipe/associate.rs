use super::BBox;
use crate::camgeo::Pixel;
use crate::features::{detect, match_two_way_with, DetectorConfig, FeatureError, Keypoint, MatchConfig, Roi};
use crate::imageproc::GrayImage;

/// Fewest feature matches for a box pair to be kept.
pub const MIN_MATCHES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct AssociateConfig {
    pub detector: DetectorConfig,
    pub matcher: MatchConfig,
    pub min_matches: usize,
}

impl Default for AssociateConfig {
    fn default() -> Self {
        Self {
            detector: DetectorConfig::default(),
            matcher: MatchConfig::default(),
            min_matches: MIN_MATCHES,
        }
    }
}

/// A left/right box pair with its matched feature pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub left_index: usize,
    pub right_index: usize,
    pub left_box: BBox,
    pub right_box: BBox,
    /// (left pixel, right pixel) per match.
    pub pairs: Vec<(Pixel, Pixel)>,
}

impl Association {
    pub fn n_matches(&self) -> usize {
        self.pairs.len()
    }

    /// Network inputs `(x1, y1, x2, y2)` per match.
    pub fn inputs(&self) -> Vec<[f64; 4]> {
        self.pairs.iter().map(|(l, r)| [l.x, l.y, r.x, r.y]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// No box in the other image could hold the same object.
    NoPartner,
    /// Every candidate pair had fewer matches than required.
    InsufficientMatches,
    /// Enough matches, but each candidate partner went to a stronger pair.
    PartnerTaken,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NoPartner => "no_partner",
            SkipReason::InsufficientMatches => "insufficient_matches",
            SkipReason::PartnerTaken => "partner_taken",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub side: Side,
    pub box_index: usize,
    pub label: String,
    pub reason: SkipReason,
    /// Largest match count over this box's candidate pairs.
    pub best_matches: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationResult {
    /// In left-box order.
    pub associations: Vec<Association>,
    pub skipped: Vec<Skip>,
}

/// Rows must overlap and the right box may not start right of where the left
/// one ends, since matched features have `x2 <= x1` on this rig.
fn is_candidate(l: &BBox, r: &BBox) -> bool {
    l.overlaps_rows(r) && r.x_min <= l.x_max
}

/// Associates boxes using the built-in detector on each ROI.
pub fn associate(
    left_boxes: &[BBox],
    right_boxes: &[BBox],
    left_img: &GrayImage,
    right_img: &GrayImage,
    cfg: &AssociateConfig,
) -> AssociationResult {
    let kps = |img: &GrayImage, b: &BBox| -> Vec<Keypoint> {
        // from_box clips to the image; zero-area or out-of-image ROIs simply
        // contribute no keypoints
        detect(img, Roi::from_box(b.x_min, b.y_min, b.x_max, b.y_max, img), &cfg.detector).unwrap_or_default()
    };
    let left_kps: Vec<_> = left_boxes.iter().map(|b| kps(left_img, b)).collect();
    let right_kps: Vec<_> = right_boxes.iter().map(|b| kps(right_img, b)).collect();
    associate_sets(left_boxes, right_boxes, &left_kps, &right_kps, cfg)
        .expect("built-in descriptors share one length")
}

/// Associates boxes using externally computed keypoints; each box takes the
/// keypoints that fall inside it.
pub fn associate_keypoints(
    left_boxes: &[BBox],
    right_boxes: &[BBox],
    left_kps: &[Keypoint],
    right_kps: &[Keypoint],
    cfg: &AssociateConfig,
) -> Result<AssociationResult, FeatureError> {
    let within = |boxes: &[BBox], kps: &[Keypoint]| -> Vec<Vec<Keypoint>> {
        boxes
            .iter()
            .map(|b| kps.iter().filter(|k| b.contains(k.px.x, k.px.y)).cloned().collect())
            .collect()
    };
    associate_sets(
        left_boxes,
        right_boxes,
        &within(left_boxes, left_kps),
        &within(right_boxes, right_kps),
        cfg,
    )
}

fn associate_sets(
    left_boxes: &[BBox],
    right_boxes: &[BBox],
    left_kps: &[Vec<Keypoint>],
    right_kps: &[Vec<Keypoint>],
    cfg: &AssociateConfig,
) -> Result<AssociationResult, FeatureError> {
    struct Cand {
        i: usize,
        j: usize,
        pairs: Vec<(Pixel, Pixel)>,
    }
    let mut cands = Vec::new();
    let mut has_partner_l = vec![false; left_boxes.len()];
    let mut has_partner_r = vec![false; right_boxes.len()];
    let mut best_l = vec![0usize; left_boxes.len()];
    let mut best_r = vec![0usize; right_boxes.len()];
    for (i, lb) in left_boxes.iter().enumerate() {
        for (j, rb) in right_boxes.iter().enumerate() {
            if !is_candidate(lb, rb) {
                continue;
            }
            has_partner_l[i] = true;
            has_partner_r[j] = true;
            let matches = match_two_way_with(&left_kps[i], &right_kps[j], &cfg.matcher)?;
            let pairs: Vec<_> = matches
                .iter()
                .map(|m| (left_kps[i][m.left_index].px, right_kps[j][m.right_index].px))
                .collect();
            best_l[i] = best_l[i].max(pairs.len());
            best_r[j] = best_r[j].max(pairs.len());
            cands.push(Cand { i, j, pairs });
        }
    }
    // most matches first; candidates were pushed in (i, j) order and the
    // sort is stable
    cands.sort_by(|a, b| b.pairs.len().cmp(&a.pairs.len()));

    let mut used_l = vec![false; left_boxes.len()];
    let mut used_r = vec![false; right_boxes.len()];
    let mut out = AssociationResult::default();
    for c in cands {
        if c.pairs.len() < cfg.min_matches {
            break;
        }
        if used_l[c.i] || used_r[c.j] {
            continue;
        }
        used_l[c.i] = true;
        used_r[c.j] = true;
        out.associations.push(Association {
            left_index: c.i,
            right_index: c.j,
            left_box: left_boxes[c.i].clone(),
            right_box: right_boxes[c.j].clone(),
            pairs: c.pairs,
        });
    }
    out.associations.sort_by_key(|a| a.left_index);

    let reason = |partner: bool, best: usize| {
        if !partner {
            SkipReason::NoPartner
        } else if best < cfg.min_matches {
            SkipReason::InsufficientMatches
        } else {
            SkipReason::PartnerTaken
        }
    };
    for (side, boxes, used, partner, best) in [
        (Side::Left, left_boxes, &used_l, &has_partner_l, &best_l),
        (Side::Right, right_boxes, &used_r, &has_partner_r, &best_r),
    ] {
        for (k, b) in boxes.iter().enumerate() {
            if !used[k] {
                out.skipped.push(Skip {
                    side,
                    box_index: k,
                    label: b.label.clone(),
                    reason: reason(partner[k], best[k]),
                    best_matches: best[k],
                });
            }
        }
    }
    Ok(out)
}
