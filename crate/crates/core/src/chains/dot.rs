use std::fmt::Write;

use super::graph::{ChainGraph, Membership};

fn quote(id: &str) -> String {
    let simple = !id.is_empty()
        && !id.starts_with(|c: char| c.is_ascii_digit())
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple {
        id.to_string()
    } else {
        format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

impl ChainGraph {
    /// Graphviz rendering of the slice at `t`: chain members filled black,
    /// systems outside every chain grey, links labeled with their tick count
    /// up to `t` and dashed once lapsed.
    pub fn to_dot(&self, t: f64) -> String {
        let members = self.memberships(t);
        let live: Vec<(&str, &str)> = self.live_edges(t).map(|e| (e.from.as_str(), e.to.as_str())).collect();
        let mut out = String::from("digraph chain {\n");
        let _ = writeln!(out, "  label=\"t = {t}\";");
        out.push_str("  node [style=filled];\n");
        for (id, m) in &members {
            let attrs = match m {
                Membership::Sdc { .. } => "fillcolor=black, fontcolor=white",
                Membership::Udc => "fillcolor=grey",
            };
            let _ = writeln!(out, "  {} [{attrs}];", quote(id));
        }
        for e in self.edges() {
            let n = e.ticks_until(t);
            if n == 0 {
                continue;
            }
            let style = if live.contains(&(e.from.as_str(), e.to.as_str())) { "" } else { ", style=dashed" };
            let _ = writeln!(out, "  {} -> {} [label=\"{n}\"{style}];", quote(&e.from), quote(&e.to));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::chains::{ChainGraph, StabilityParams};

    #[test]
    fn dot_marks_members_and_counts_ticks() {
        let mut g = ChainGraph::new(StabilityParams::default()).unwrap();
        g.declare_initiators("A", "B").unwrap();
        g.add_system("C d").unwrap();
        g.record_value_determination("A", "B", 1.0).unwrap();
        let dot = g.to_dot(1.0);
        assert!(dot.contains("  A -> B [label=\"1\"];"));
        assert!(dot.contains("  B [fillcolor=black, fontcolor=white];"));
        assert!(dot.contains("  \"C d\" [fillcolor=grey];"));
        assert!(g.to_dot(0.5).lines().all(|l| !l.contains("->")));
        assert!(g.to_dot(3.0).contains("style=dashed"));
    }
}
