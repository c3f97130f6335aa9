//! CSV rendering of result tables. Floats are written with 17 significant
//! digits so values survive a text round trip.

use std::fmt::Write as _;

use crate::asymptotics::SweepTable;
use crate::flux::FluxTable;
use crate::reaction_cycles::{AffinityReport, ClassFluxTable};
use crate::state_space::StateSpace;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn join_i64(v: &[i64]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn join_u64(v: &[u64]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn states_csv(space: &StateSpace, species: &[String]) -> String {
    let mut s = String::from("index");
    for name in species {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (i, st) in space.states().iter().enumerate() {
        let _ = write!(s, "{i}");
        for c in st {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
    }
    s
}

/// `record,cycle_id,s,states,labels,omega`: one `cycle` row per cycle, then
/// one `stationary` row per state carrying the state index in `states` and
/// its probability in `omega`.
pub fn flux_csv(table: &FluxTable) -> String {
    let mut s = String::from("record,cycle_id,s,states,labels,omega\n");
    for r in &table.records {
        let c = &r.cycle;
        let states: Vec<String> = c.states.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "cycle,{},{},{},{},{}", c.id(), c.len(), states.join(" "), c.label_string(), num(r.omega));
    }
    for (i, p) in table.stationary.iter().enumerate() {
        let _ = writeln!(s, "stationary,,,{i},,{}", num(*p));
    }
    s
}

pub fn class_csv(table: &ClassFluxTable, fluxes: &FluxTable) -> String {
    let mut s = String::from("net,members,omega\n");
    for c in &table.classes {
        let ids: Vec<String> = c.members.iter().map(|m| fluxes.records[m.cycle].cycle.id()).collect();
        let _ = writeln!(s, "{},{},{}", join_i64(&c.net), ids.join(" "), num(c.omega));
    }
    s
}

pub fn affinity_csv(report: &AffinityReport) -> String {
    let mut s = String::from("forward,backward,j_plus,j_minus,affinity,delta_g\n");
    for p in &report.pairs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            join_i64(&p.forward),
            join_i64(&p.backward),
            num(p.j_plus),
            num(p.j_minus),
            num(p.affinity),
            num(p.delta_g)
        );
    }
    s
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut s = String::from("V,key,mesoscopic_per_V,limit,abs_error,est_order\n");
    for r in &table.rows {
        let order = r.est_order.map(num).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{},{}", num(r.v), r.key, num(r.mesoscopic_per_v), num(r.limit), num(r.abs_error), order);
    }
    s
}
