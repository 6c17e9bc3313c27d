//! Great-circle distances between district centroids and k-nearest-neighbour lists.
//!
//!     cargo run --example spatial_graph

use hstm::spatial::{haversine_km, DistrictGraph, LatLon};

fn main() -> hstm::Result<()> {
    let places = [
        ("BANKURA", 23.23, 87.07),
        ("BIRBHUM", 23.90, 87.53),
        ("HOWRAH", 22.59, 88.31),
        ("KOLKATA", 22.57, 88.36),
        ("NADIA", 23.47, 88.55),
        ("PURULIA", 23.33, 86.36),
    ];
    let names = places.iter().map(|p| p.0.to_string()).collect();
    let centroids: Vec<LatLon> = places.iter().map(|p| LatLon::new(p.1, p.2)).collect();
    println!("HOWRAH-KOLKATA {:.2} km", haversine_km(centroids[2], centroids[3]));

    let graph = DistrictGraph::new(names, centroids);
    for (d, name) in graph.districts.iter().enumerate() {
        let nn: Vec<String> = graph
            .knn(d, 3)?
            .iter()
            .map(|&n| format!("{} {:.0}", graph.districts[n], graph.distances[d][n]))
            .collect();
        println!("{name:>8} -> {}", nn.join(", "));
    }
    // asking for more neighbours than exist is an error, not a silent truncation
    println!("k=6: {}", graph.knn(0, 6).unwrap_err());
    Ok(())
}
