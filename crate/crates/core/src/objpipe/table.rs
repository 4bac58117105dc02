use std::io::Write;

use super::{RangedObject, Skip};

pub const TABLE_HEADER: &str = "id,class,x_min,y_min,x_max,y_max,n_matches,median_distance_cm,far_flag";
pub const COMPARISON_HEADER: &str = "id,class,ann_distance_cm,oracle_distance_cm,abs_error_cm";
pub const SKIP_LOG_HEADER: &str = "side,box_index,class,reason,best_matches";

fn sorted(objects: &[RangedObject]) -> Vec<&RangedObject> {
    let mut v: Vec<_> = objects.iter().collect();
    v.sort_by(|a, b| {
        a.median_distance_cm
            .total_cmp(&b.median_distance_cm)
            .then(a.object_id.cmp(&b.object_id))
    });
    v
}

fn write_rows(objects: &[RangedObject], mut w: impl Write, debug: bool) -> std::io::Result<()> {
    write!(w, "{TABLE_HEADER}")?;
    if debug {
        write!(w, ",raw_median_cm")?;
    }
    writeln!(w)?;
    for o in sorted(objects) {
        let b = &o.left_box;
        write!(
            w,
            "{},{},{:.2},{:.2},{:.2},{:.2},{},{:.2},{}",
            o.object_id, o.label, b.x_min, b.y_min, b.x_max, b.y_max, o.n_matches, o.median_distance_cm, o.far_flag
        )?;
        if debug {
            write!(w, ",{:.2}", o.raw_median_cm)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Per-object results, nearest first. Boxes are the left-image boxes.
pub fn write_table(objects: &[RangedObject], w: impl Write) -> std::io::Result<()> {
    write_rows(objects, w, false)
}

/// [`write_table`] plus the unclamped median as a trailing column.
pub fn write_table_debug(objects: &[RangedObject], w: impl Write) -> std::io::Result<()> {
    write_rows(objects, w, true)
}

/// One object's network and geometric distances.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub object_id: usize,
    pub label: String,
    pub ann_cm: f64,
    pub oracle_cm: f64,
}

impl ComparisonRow {
    pub fn abs_error_cm(&self) -> f64 {
        (self.ann_cm - self.oracle_cm).abs()
    }
}

/// Network vs geometric distance per object, ordered by network distance.
pub fn write_comparison(rows: &[ComparisonRow], mut w: impl Write) -> std::io::Result<()> {
    let mut v: Vec<_> = rows.iter().collect();
    v.sort_by(|a, b| a.ann_cm.total_cmp(&b.ann_cm).then(a.object_id.cmp(&b.object_id)));
    writeln!(w, "{COMPARISON_HEADER}")?;
    for r in v {
        writeln!(
            w,
            "{},{},{:.2},{:.2},{:.2}",
            r.object_id,
            r.label,
            r.ann_cm,
            r.oracle_cm,
            r.abs_error_cm()
        )?;
    }
    Ok(())
}

pub fn write_skip_log(skips: &[Skip], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{SKIP_LOG_HEADER}")?;
    for s in skips {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.side.as_str(),
            s.box_index,
            s.label,
            s.reason.as_str(),
            s.best_matches
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objpipe::BBox;

    fn obj(id: usize, cm: f64) -> RangedObject {
        let b = BBox {
            class_id: 1,
            label: "rock".into(),
            x_min: 1.0,
            y_min: 2.0,
            x_max: 3.0,
            y_max: 4.0,
            confidence: 1.0,
        };
        RangedObject {
            object_id: id,
            label: "rock".into(),
            left_box: b.clone(),
            right_box: b,
            n_matches: 4,
            per_feature_distance_cm: vec![cm; 4],
            raw_median_cm: cm,
            median_distance_cm: cm,
            far_flag: false,
        }
    }

    fn render(objects: &[RangedObject]) -> String {
        let mut buf = Vec::new();
        write_table(objects, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(render(&[]), format!("{TABLE_HEADER}\n"));
    }

    #[test]
    fn rows_sorted_by_distance() {
        let s = render(&[obj(0, 150.0), obj(1, 140.0)]);
        let rows: Vec<_> = s.lines().skip(1).collect();
        assert_eq!(rows, ["1,rock,1.00,2.00,3.00,4.00,4,140.00,false", "0,rock,1.00,2.00,3.00,4.00,4,150.00,false"]);
    }

    #[test]
    fn debug_column() {
        let mut o = obj(3, 1000.0);
        o.raw_median_cm = 1450.0;
        o.far_flag = true;
        let mut buf = Vec::new();
        write_table_debug(&[o], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with(&format!("{TABLE_HEADER},raw_median_cm\n")));
        assert!(s.ends_with(",1000.00,true,1450.00\n"), "{s}");
    }

    #[test]
    fn comparison_abs_error() {
        let rows = [ComparisonRow {
            object_id: 1,
            label: "rock".into(),
            ann_cm: 140.55,
            oracle_cm: 141.23,
        }];
        let mut buf = Vec::new();
        write_comparison(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(1), Some("1,rock,140.55,141.23,0.68"));
    }
}
