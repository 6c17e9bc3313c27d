//! District centroids, great-circle distances and nearest-neighbour lists.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::StationRecord;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }
}

pub fn haversine_km(a: LatLon, b: LatLon) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Arithmetic mean of station coordinates per district. Each station counts once,
/// however many daily rows it has.
pub fn district_centroids(records: &[StationRecord]) -> Result<BTreeMap<String, LatLon>> {
    let mut stations: BTreeMap<&str, BTreeMap<&str, LatLon>> = BTreeMap::new();
    let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
    for r in records {
        seen.insert(r.district.as_str(), ());
        if let (Some(lat), Some(lon)) = (r.lat, r.lon) {
            stations
                .entry(r.district.as_str())
                .or_default()
                .entry(r.station_id.as_str())
                .or_insert(LatLon::new(lat, lon));
        }
    }
    let mut out = BTreeMap::new();
    for district in seen.keys() {
        let st = stations
            .get(district)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::NoStations(district.to_string()))?;
        let n = st.len() as f64;
        let lat = st.values().map(|p| p.lat).sum::<f64>() / n;
        let lon = st.values().map(|p| p.lon).sum::<f64>() / n;
        out.insert(district.to_string(), LatLon::new(lat, lon));
    }
    Ok(out)
}

/// Districts with pairwise distances and neighbour lists sorted by ascending distance,
/// ties broken by district name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "GraphFile", into = "GraphFile")]
pub struct DistrictGraph {
    pub districts: Vec<String>,
    pub centroids: Vec<LatLon>,
    pub distances: Vec<Vec<f64>>,
    pub neighbor_lists: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    districts: Vec<String>,
    centroids: Vec<LatLon>,
    distances_km: Vec<Vec<f64>>,
}

impl From<GraphFile> for DistrictGraph {
    fn from(f: GraphFile) -> Self {
        DistrictGraph::from_distances(f.districts, f.centroids, f.distances_km)
    }
}

impl From<DistrictGraph> for GraphFile {
    fn from(g: DistrictGraph) -> Self {
        GraphFile {
            districts: g.districts,
            centroids: g.centroids,
            distances_km: g.distances,
        }
    }
}

impl DistrictGraph {
    pub fn new(districts: Vec<String>, centroids: Vec<LatLon>) -> Self {
        Self::with_metric(districts, centroids, haversine_km)
    }

    /// Builds the graph with a caller-supplied distance function.
    pub fn with_metric(districts: Vec<String>, centroids: Vec<LatLon>, metric: impl Fn(LatLon, LatLon) -> f64) -> Self {
        let n = districts.len();
        let mut distances = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = metric(centroids[i], centroids[j]);
                distances[i][j] = d;
                distances[j][i] = d;
            }
        }
        Self::from_distances(districts, centroids, distances)
    }

    fn from_distances(districts: Vec<String>, centroids: Vec<LatLon>, distances: Vec<Vec<f64>>) -> Self {
        let n = districts.len();
        let neighbor_lists = (0..n)
            .map(|i| {
                let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                others.sort_by(|&a, &b| {
                    distances[i][a]
                        .total_cmp(&distances[i][b])
                        .then_with(|| districts[a].cmp(&districts[b]))
                });
                others
            })
            .collect();
        DistrictGraph {
            districts,
            centroids,
            distances,
            neighbor_lists,
        }
    }

    pub fn from_centroid_map(centroids: &BTreeMap<String, LatLon>) -> Self {
        let (names, points) = centroids.iter().map(|(k, v)| (k.clone(), *v)).unzip();
        Self::new(names, points)
    }

    pub fn len(&self) -> usize {
        self.districts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.districts.is_empty()
    }

    /// The `k` nearest other districts of district index `d`.
    pub fn knn(&self, d: usize, k: usize) -> Result<&[usize]> {
        let list = &self.neighbor_lists[d];
        if k > list.len() {
            return Err(Error::KTooLarge { k, available: list.len() });
        }
        Ok(&list[..k])
    }

    /// Reorders (and subsets) the graph to match `order`, typically a panel's district list.
    pub fn aligned_to(&self, order: &[String]) -> Result<DistrictGraph> {
        let idx = order
            .iter()
            .map(|name| {
                self.districts
                    .iter()
                    .position(|d| d == name)
                    .ok_or_else(|| Error::UnknownDistrict(name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let distances = idx.iter().map(|&i| idx.iter().map(|&j| self.distances[i][j]).collect()).collect();
        Ok(Self::from_distances(
            order.to_vec(),
            idx.iter().map(|&i| self.centroids[i]).collect(),
            distances,
        ))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn station(id: &str, district: &str, lat: f64, lon: f64) -> StationRecord {
        StationRecord {
            station_id: id.into(),
            district: district.into(),
            date: NaiveDate::from_ymd_opt(1900, 1, 1).unwrap(),
            rainfall_mm: Some(0.0),
            lat: Some(lat),
            lon: Some(lon),
        }
    }

    /// Spherical law of cosines, an independent route to the great-circle distance.
    fn cosine_law_km(a: LatLon, b: LatLon) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dl = (b.lon - a.lon).to_radians();
        let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
        EARTH_RADIUS_KM * c.acos()
    }

    #[test]
    fn centroid_cases() {
        let c = district_centroids(&[station("S1", "A", 22.5, 88.3)]).unwrap();
        assert_eq!(c["A"], LatLon::new(22.5, 88.3));
        let c = district_centroids(&[station("S1", "A", 20.0, 80.0), station("S2", "A", 24.0, 84.0)]).unwrap();
        assert_eq!(c["A"], LatLon::new(22.0, 82.0));
    }

    #[test]
    fn centroid_matches_independent_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<(f64, f64)> = (0..5).map(|_| (rng.gen_range(21.0..27.0), rng.gen_range(86.0..89.0))).collect();
        let recs: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(i, &(la, lo))| station(&format!("S{i}"), "D", la, lo))
            .collect();
        let c = district_centroids(&recs).unwrap()["D"];
        let mut lat = 0.0;
        let mut lon = 0.0;
        for (i, (la, lo)) in pts.iter().enumerate() {
            lat += (la - lat) / (i + 1) as f64;
            lon += (lo - lon) / (i + 1) as f64;
        }
        assert!((c.lat - lat).abs() < 1e-12 && (c.lon - lon).abs() < 1e-12);
    }

    #[test]
    fn district_without_coordinates_fails() {
        let mut r = station("S1", "A", 0.0, 0.0);
        r.lat = None;
        assert!(matches!(district_centroids(&[r]), Err(Error::NoStations(d)) if d == "A"));
    }

    #[test]
    fn haversine_cases() {
        let p = LatLon::new(22.57, 88.36);
        assert_eq!(haversine_km(p, p), 0.0);
        let anti = haversine_km(LatLon::new(0.0, 0.0), LatLon::new(0.0, 180.0));
        assert!((anti - std::f64::consts::PI * EARTH_RADIUS_KM).abs() < 1e-6);
        assert!((anti - 20015.1).abs() < 0.1);
        let a = LatLon::new(22.57, 88.36);
        let b = LatLon::new(27.04, 88.26);
        let h = haversine_km(a, b);
        let o = cosine_law_km(a, b);
        assert!(((h - o) / o).abs() < 1e-3, "{h} vs {o}");
    }

    fn line_graph() -> DistrictGraph {
        // equally spaced along the equator; B is the middle
        DistrictGraph::new(
            vec!["C".into(), "B".into(), "A".into()],
            vec![LatLon::new(0.0, 2.0), LatLon::new(0.0, 1.0), LatLon::new(0.0, 0.0)],
        )
    }

    #[test]
    fn knn_cases() {
        let g = line_graph();
        assert!(g.knn(1, 0).unwrap().is_empty());
        // brute-force: both at identical distance, so names decide
        let near = g.knn(1, 2).unwrap();
        assert_eq!(near.iter().map(|&i| g.districts[i].as_str()).collect::<Vec<_>>(), vec!["A", "C"]);
        assert_eq!(g.knn(0, 2).unwrap(), &[1, 2]);
        assert!(matches!(g.knn(0, 3), Err(Error::KTooLarge { k: 3, available: 2 })));
    }

    #[test]
    fn json_round_trip_and_alignment() {
        let g = line_graph();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        g.write_json(&path).unwrap();
        let h = DistrictGraph::read_json(&path).unwrap();
        assert_eq!(g, h);
        let a = g.aligned_to(&["A".into(), "B".into(), "C".into()]).unwrap();
        assert_eq!(a.distances[0][2], g.distances[2][0]);
        assert_eq!(a.knn(0, 2).unwrap(), &[1, 2]);
        assert!(g.aligned_to(&["Z".into()]).is_err());
    }

    fn arb_point() -> impl Strategy<Value = LatLon> {
        (20.0f64..28.0, 85.0f64..90.0).prop_map(|(a, b)| LatLon::new(a, b))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in arb_point(), b in arb_point(), c in arb_point()) {
            prop_assert!(haversine_km(a, c) <= haversine_km(a, b) + haversine_km(b, c) + 1e-9);
        }

        #[test]
        fn graph_invariants(points in proptest::collection::vec(arb_point(), 2..8)) {
            let names: Vec<String> = (0..points.len()).map(|i| format!("D{i}")).collect();
            let g = DistrictGraph::new(names, points);
            let n = g.len();
            for i in 0..n {
                prop_assert_eq!(g.distances[i][i], 0.0);
                prop_assert_eq!(g.neighbor_lists[i].len(), n - 1);
                prop_assert!(!g.neighbor_lists[i].contains(&i));
                for j in 0..n {
                    prop_assert_eq!(g.distances[i][j], g.distances[j][i]);
                }
                for w in g.neighbor_lists[i].windows(2) {
                    prop_assert!(g.distances[i][w[0]] <= g.distances[i][w[1]]);
                }
                for k in 0..n - 1 {
                    let a = g.knn(i, k).unwrap();
                    let b = g.knn(i, k + 1).unwrap();
                    prop_assert_eq!(a, &b[..k]);
                }
            }
        }
    }
}
