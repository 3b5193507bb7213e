use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use super::{CoalitionValueTable, Mode};
use crate::model::Game;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub coalition: Vec<String>,
    pub v: f64,
}

/// Degrees of every agent in a scope together with the table behind them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResponsibilityReport {
    pub mode: Mode,
    pub horizon: usize,
    pub upsilon: f64,
    /// In agent order.
    #[serde(serialize_with = "ordered_map")]
    pub degrees: Vec<(String, f64)>,
    pub table: Vec<TableRow>,
}

fn ordered_map<S: Serializer>(entries: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(entries.len()))?;
    for (k, v) in entries {
        map.serialize_entry(k, v)?;
    }
    map.end()
}

impl ResponsibilityReport {
    pub fn new(game: &Game, table: &CoalitionValueTable) -> Self {
        let degrees = table
            .scope
            .members()
            .map(|i| {
                (
                    game.agent_name(i).to_string(),
                    table.degree(i).expect("member of scope"),
                )
            })
            .collect();
        Self {
            mode: table.mode,
            horizon: table.horizon,
            upsilon: table.upsilon(),
            degrees,
            table: table
                .entries
                .iter()
                .map(|&(c, v)| TableRow {
                    coalition: c.names(game),
                    v,
                })
                .collect(),
        }
    }

    pub fn degree(&self, agent: &str) -> Option<f64> {
        self.degrees.iter().find(|(a, _)| a == agent).map(|&(_, v)| v)
    }
}
