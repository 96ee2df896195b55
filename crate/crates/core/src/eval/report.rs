use serde::Serialize;

use crate::model::UnitKind;

use super::evaluate::ScoreTree;

/// One unit of a score tree as a spreadsheet row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatRow {
    pub path: String,
    pub name: String,
    pub kind: UnitKind,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub header: Option<f64>,
    pub attribute: Option<f64>,
    pub connection: Option<f64>,
    pub definition: Option<f64>,
    pub state: Option<f64>,
    pub equation: Option<f64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub len: Option<usize>,
    #[serde(rename = "final")]
    pub final_score: Option<f64>,
    pub flags: String,
}

fn collect(t: &ScoreTree, prefix: &str, out: &mut Vec<FlatRow>) {
    let seg = t.instance.as_deref().unwrap_or(&t.name);
    let path = if prefix.is_empty() { seg.to_string() } else { format!("{prefix}/{seg}") };
    let c = &t.components;
    out.push(FlatRow {
        path: path.clone(),
        name: t.name.clone(),
        kind: t.kind,
        a: t.a,
        p: t.p,
        header: c.header,
        attribute: c.attribute,
        connection: c.connection,
        definition: c.definition,
        state: c.state,
        equation: c.equation,
        m: t.counts.map(|x| x.m),
        n: t.counts.map(|x| x.n),
        len: t.counts.map(|x| x.len),
        final_score: t.final_score,
        flags: t.flags.join(";"),
    });
    for child in &t.children {
        collect(child, &path, out);
    }
}

/// Pre-order rows, paths joined by `/`.
pub fn flat_rows(tree: &ScoreTree) -> Vec<FlatRow> {
    let mut out = Vec::new();
    collect(tree, "", &mut out);
    out
}

pub fn to_csv(tree: &ScoreTree) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in flat_rows(tree) {
        w.serialize(row).expect("row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::eval::{Components, ErrorCounts};

    fn leaf(name: &str, inst: &str, a: f64) -> ScoreTree {
        ScoreTree {
            name: name.into(),
            instance: Some(inst.into()),
            generated: Some(name.into()),
            kind: UnitKind::Discrete,
            a,
            p: a,
            fully_correct: a == 1.0,
            components: Components {
                header: Some(1.0),
                state: Some(a),
                ..Components::default()
            },
            weights: BTreeMap::new(),
            counts: Some(ErrorCounts { m: 0, n: 0, len: 2 }),
            flags: vec![],
            children: vec![],
            final_score: None,
        }
    }

    #[test]
    fn rows_and_csv() {
        let mut top = leaf("Sys", "", 1.0);
        top.instance = None;
        top.kind = UnitKind::Couple;
        top.final_score = Some(0.9);
        top.children = vec![leaf("A", "a", 1.0), leaf("B", "b", 0.8)];
        top.children[1].flags = vec!["missing".into(), "x".into()];
        let rows = flat_rows(&top);
        assert_eq!(rows.iter().map(|r| r.path.as_str()).collect::<Vec<_>>(), ["Sys", "Sys/a", "Sys/b"]);
        let csv = to_csv(&top);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "path,name,kind,A,P,header,attribute,connection,definition,state,equation,m,n,len,final,flags"
        );
        assert_eq!(lines.next().unwrap(), "Sys,Sys,couple,1.0,1.0,1.0,,,,1.0,,0,0,2,0.9,");
        assert_eq!(lines.nth(1).unwrap(), "Sys/b,B,discrete,0.8,0.8,1.0,,,,0.8,,0,0,2,,missing;x");
    }
}
