//! Samples a collision-free camera route over a synthetic floorplan.
//!
//! cargo run --example route_sampling [seed]

use panoworld::route::{sample_route, RouteParams};
use panoworld::synthetic::{synthetic_floorplan, FloorplanParams};

fn main() -> panoworld::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let floor = synthetic_floorplan(&FloorplanParams { seed, ..Default::default() })?;
    println!("{} walkable points, {} obstacles", floor.points.points.len(), floor.boxes.len());

    let params = RouteParams { seed, ..Default::default() };
    match sample_route(&floor.points, &floor.boxes, &params)? {
        Ok(route) => {
            println!(
                "route {:?}: {:.2} m after {} attempts, {} frames",
                route.endpoints,
                route.length,
                route.attempts,
                route.trajectory.len()
            );
            println!(
                "max turn {:.1} deg raw, {:.1} deg smoothed",
                route.raw.max_turning_angle().to_degrees(),
                route.smoothed.max_turning_angle().to_degrees()
            );
        }
        Err(rejected) => println!("{rejected}"),
    }
    Ok(())
}
