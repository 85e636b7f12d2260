//! GeoJSON FeatureCollection of an instance's nodes and a solution's routes.
//!
//! Positions are the instance's planar coordinates as `[x, y]`.

use rvrp_core::evaluation::{load_profile, route_cost};
use rvrp_core::instance::{Instance, DEPOT};
use rvrp_core::Solution;
use serde_json::{json, Value};

use crate::error::CliError;

pub fn feature_collection(inst: &Instance, sol: &Solution) -> Result<Value, CliError> {
    let depot = inst.node(DEPOT).ok_or_else(|| CliError::Mismatch("instance has no depot".into()))?;
    let mut features: Vec<Value> = inst
        .nodes()
        .iter()
        .map(|n| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [n.x, n.y] },
                "properties": {
                    "id": n.id,
                    "cluster": n.cluster,
                    "delivery": n.delivery,
                    "pickup": n.pickup,
                    "is_depot": n.is_depot(),
                },
            })
        })
        .collect();
    let mut total = 0.0;
    for (k, route) in sol.routes().iter().enumerate() {
        let cost = route_cost(route, inst).map_err(|e| CliError::Mismatch(e.to_string()))?;
        let loads = load_profile(route, inst).map_err(|e| CliError::Mismatch(e.to_string()))?;
        total += cost;
        let mut coords = vec![json!([depot.x, depot.y])];
        for &id in route {
            let n = inst.node(id).expect("priced above");
            coords.push(json!([n.x, n.y]));
        }
        coords.push(json!([depot.x, depot.y]));
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": {
                "route_index": k,
                "customers": route.len(),
                "cost_s": round2(cost),
                "max_load": loads.max_load(),
            },
        }));
    }
    Ok(json!({
        "type": "FeatureCollection",
        "properties": {
            "instance": inst.name(),
            "vehicles": sol.route_count(),
            "total_cost": round2(total),
        },
        "features": features,
    }))
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}
