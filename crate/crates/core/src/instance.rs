//! City geometry, distance matrices and fixed-endpoint TSP instances.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean Earth radius used by [`haversine_km`].
pub const EARTH_RADIUS_KM: f64 = 6371.0;

pub const DEPARTURE_CITY: &str = "Calais";
pub const DESTINATION_CITY: &str = "Milan";

/// Smallest and largest instance sizes accepted by [`select_subinstance`] by default.
pub const MIN_CITIES: usize = 4;
pub const DEFAULT_MAX_CITIES: usize = 8;

/// A named point, stored as (lon, lat) in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub name: String,
    pub lon: f64,
    pub lat: f64,
}

impl City {
    pub fn new(name: impl Into<String>, lon: f64, lat: f64) -> Result<Self> {
        let city = City {
            name: name.into(),
            lon,
            lat,
        };
        city.validate()?;
        Ok(city)
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("city name must be nonempty"));
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::invalid(format!(
                "latitude {} of `{}` outside [-90, 90]",
                self.lat, self.name
            )));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::invalid(format!(
                "longitude {} of `{}` outside [-180, 180]",
                self.lon, self.name
            )));
        }
        Ok(())
    }
}

const POOL: [(&str, f64, f64); 10] = [
    ("Amsterdam", 4.9041, 52.3676),
    ("Barcelona", 2.1734, 41.3851),
    ("Berlin", 13.4050, 52.5200),
    ("Calais", 1.8587, 50.9513),
    ("Madrid", -3.7038, 40.4168),
    ("Milan", 9.1900, 45.4642),
    ("Paris", 2.3522, 48.8566),
    ("Rome", 12.4964, 41.9028),
    ("Vienna", 16.3738, 48.2082),
    ("Zurich", 8.5417, 47.3769),
];

/// The built-in ten-city European pool.
pub fn european_cities() -> Vec<City> {
    POOL.iter()
        .map(|&(name, lon, lat)| City {
            name: name.to_string(),
            lon,
            lat,
        })
        .collect()
}

/// Load a city pool from a JSON array of `{name, lon, lat}` objects.
pub fn load_city_pool(path: impl AsRef<Path>) -> Result<Vec<City>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cities: Vec<City> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for c in &cities {
        c.validate()?;
    }
    check_unique_names(&cities)?;
    Ok(cities)
}

fn check_unique_names(cities: &[City]) -> Result<()> {
    let mut seen = HashSet::new();
    for c in cities {
        if !seen.insert(c.name.as_str()) {
            return Err(Error::DuplicateCity(c.name.clone()));
        }
    }
    Ok(())
}

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km<F: Scalar>(a: &City, b: &City) -> F {
    let to_rad = |deg: f64| F::lit(deg).to_radians();
    let (lat1, lat2) = (to_rad(a.lat), to_rad(b.lat));
    let dlat = to_rad(b.lat) - to_rad(a.lat);
    let dlon = to_rad(b.lon) - to_rad(a.lon);
    let half = F::lit(0.5);
    let h = (dlat * half).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon * half).sin().powi(2);
    let h = h.min(F::one());
    F::lit(2.0 * EARTH_RADIUS_KM) * h.sqrt().asin()
}

/// Dense symmetric distance matrix in kilometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix<F> {
    n: usize,
    d: Vec<F>,
}

impl<F: Scalar> DistanceMatrix<F> {
    /// Build from a full row-major table, checking symmetry and the zero diagonal.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.len();
        let mut d = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            d.extend_from_slice(row);
        }
        for i in 0..n {
            if d[i * n + i] != F::zero() {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if v < F::zero() || !v.is_finite() {
                    return Err(Error::invalid(format!("bad distance at ({i}, {j})")));
                }
                if v != d[j * n + i] {
                    return Err(Error::invalid(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { n, d })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.d[i * self.n + j]
    }

    pub fn max_edge(&self) -> F {
        self.d.iter().copied().fold(F::zero(), F::max)
    }

    /// Maximum edge among the listed nodes only.
    pub fn max_edge_among(&self, nodes: &[usize]) -> F {
        let mut m = F::zero();
        for &a in nodes {
            for &b in nodes {
                m = m.max(self.get(a, b));
            }
        }
        m
    }
}

/// Pairwise haversine distances. Rejects duplicate names and fewer than two cities.
pub fn build_distance_matrix<F: Scalar>(cities: &[City]) -> Result<DistanceMatrix<F>> {
    if cities.len() < 2 {
        return Err(Error::invalid("need at least two cities"));
    }
    for c in cities {
        c.validate()?;
    }
    check_unique_names(cities)?;
    let n = cities.len();
    let mut d = vec![F::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = haversine_km::<F>(&cities[i], &cities[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix { n, d })
}

/// A closed tour through every city, stored without the implicit return edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    pub fn new(order: Vec<usize>) -> Self {
        Tour { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

impl fmt::Display for Tour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.order.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(" -> "))
    }
}

/// Fixed-endpoint TSP instance: the tour starts at `start`, visits every
/// other city once, reaches `end` last and returns to `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance<F> {
    cities: Vec<City>,
    dist: DistanceMatrix<F>,
    start: usize,
    end: usize,
}

impl<F: Scalar> TspInstance<F> {
    pub fn new(cities: Vec<City>, start: usize, end: usize) -> Result<Self> {
        let dist = build_distance_matrix(&cities)?;
        Self::with_distances(cities, dist, start, end)
    }

    /// Instance whose endpoints are looked up by name.
    pub fn with_endpoints(cities: Vec<City>, start: &str, end: &str) -> Result<Self> {
        let find = |name: &str| {
            cities
                .iter()
                .position(|c| c.name == name)
                .ok_or_else(|| Error::invalid(format!("city `{name}` not in list")))
        };
        let (s, e) = (find(start)?, find(end)?);
        Self::new(cities, s, e)
    }

    /// Instance over an explicit distance matrix (cities are kept as labels).
    pub fn with_distances(
        cities: Vec<City>,
        dist: DistanceMatrix<F>,
        start: usize,
        end: usize,
    ) -> Result<Self> {
        let n = cities.len();
        if dist.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: dist.len(),
            });
        }
        if start >= n || end >= n {
            return Err(Error::invalid(format!(
                "endpoint index out of range for {n} cities"
            )));
        }
        if start == end {
            return Err(Error::invalid("start and end must differ"));
        }
        Ok(TspInstance {
            cities,
            dist,
            start,
            end,
        })
    }

    pub fn cities(&self) -> &[City] {
        &self.cities
    }

    pub fn distances(&self) -> &DistanceMatrix<F> {
        &self.dist
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> F {
        self.dist.get(i, j)
    }

    pub fn n(&self) -> usize {
        self.cities.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Indices other than the endpoints, in storage order.
    pub fn intermediates(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| i != self.start && i != self.end)
            .collect()
    }

    pub fn validate_tour(&self, tour: &Tour) -> Result<()> {
        let n = self.n();
        let order = tour.order();
        if order.len() != n {
            return Err(Error::MalformedTour(format!(
                "expected {n} cities, got {}",
                order.len()
            )));
        }
        let mut seen = vec![false; n];
        for &c in order {
            if c >= n {
                return Err(Error::MalformedTour(format!("city index {c} out of range")));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::MalformedTour(format!("city {c} visited twice")));
            }
        }
        if order[0] != self.start {
            return Err(Error::MalformedTour(format!(
                "tour starts at {} instead of {}",
                order[0], self.start
            )));
        }
        if order[n - 1] != self.end {
            return Err(Error::MalformedTour(format!(
                "tour ends at {} instead of {}",
                order[n - 1],
                self.end
            )));
        }
        Ok(())
    }

    /// Closed-loop cost: consecutive edges plus the return edge `end -> start`.
    pub fn tour_cost(&self, tour: &Tour) -> Result<F> {
        self.validate_tour(tour)?;
        Ok(self.cycle_cost_unchecked(tour.order()))
    }

    pub(crate) fn cycle_cost_unchecked(&self, order: &[usize]) -> F {
        path_cost(&self.dist, order) + self.dist(order[order.len() - 1], order[0])
    }

    /// Same geometry with the intermediate cities stored in a different order.
    /// `perm[k]` is the old index placed at new position `k`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<(Self, Vec<usize>)> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: perm.len(),
            });
        }
        let mut new_of_old = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || new_of_old[old] != usize::MAX {
                return Err(Error::invalid("relabeling is not a permutation"));
            }
            new_of_old[old] = new;
        }
        let cities = perm.iter().map(|&o| self.cities[o].clone()).collect();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| self.dist(perm[i], perm[j])).collect())
            .collect();
        let dist = DistanceMatrix::from_rows(rows)?;
        let inst = TspInstance::with_distances(
            cities,
            dist,
            new_of_old[self.start],
            new_of_old[self.end],
        )?;
        Ok((inst, new_of_old))
    }
}

/// Sum of consecutive edges along an open path.
pub fn path_cost<F: Scalar>(dist: &DistanceMatrix<F>, order: &[usize]) -> F {
    order
        .windows(2)
        .map(|w| dist.get(w[0], w[1]))
        .fold(F::zero(), |a, b| a + b)
}

/// Free-function form of [`TspInstance::tour_cost`].
pub fn tour_cost<F: Scalar>(instance: &TspInstance<F>, tour: &Tour) -> Result<F> {
    instance.tour_cost(tour)
}

/// Draw an `n`-city instance from `pool`: always contains the departure and
/// destination cities, the remaining `n - 2` are drawn without replacement
/// using ChaCha8 seeded with `seed`. Selected cities keep their pool order.
pub fn select_subinstance<F: Scalar>(
    pool: &[City],
    n: usize,
    seed: u64,
    max_cities: usize,
) -> Result<TspInstance<F>> {
    if n < MIN_CITIES || n > max_cities {
        return Err(Error::invalid(format!(
            "city count {n} outside [{MIN_CITIES}, {max_cities}]"
        )));
    }
    check_unique_names(pool)?;
    let find = |name: &str| {
        pool.iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::invalid(format!("pool lacks `{name}`")))
    };
    let (s, e) = (find(DEPARTURE_CITY)?, find(DESTINATION_CITY)?);
    let others: Vec<usize> = (0..pool.len()).filter(|&i| i != s && i != e).collect();
    if others.len() < n - 2 {
        return Err(Error::invalid(format!(
            "pool of {} cities cannot supply {n}",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = others.choose_multiple(&mut rng, n - 2).copied().collect();
    chosen.push(s);
    chosen.push(e);
    chosen.sort_unstable();
    let cities = chosen.iter().map(|&i| pool[i].clone()).collect();
    TspInstance::with_endpoints(cities, DEPARTURE_CITY, DESTINATION_CITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn city(name: &str) -> City {
        european_cities()
            .into_iter()
            .find(|c| c.name == name)
            .unwrap()
    }

    #[test]
    fn haversine_identical_points_is_zero() {
        let c = city("Calais");
        assert_eq!(haversine_km::<f64>(&c, &c), 0.0);
    }

    #[test]
    fn haversine_is_symmetric() {
        let (a, b) = (city("Calais"), city("Milan"));
        assert_eq!(haversine_km::<f64>(&a, &b), haversine_km::<f64>(&b, &a));
    }

    #[test]
    fn haversine_calais_milan_golden() {
        // Central angle from the unit-vector cross/dot atan2 form, computed separately.
        let d = haversine_km::<f64>(&city("Calais"), &city("Milan"));
        assert!((d - 816.162539).abs() < 5e-7, "{d}");
    }

    #[test]
    fn haversine_f32_close_to_f64() {
        let (a, b) = (city("Madrid"), city("Vienna"));
        let d64 = haversine_km::<f64>(&a, &b);
        let d32 = haversine_km::<f32>(&a, &b) as f64;
        assert!((d64 - d32).abs() / d64 < 1e-5);
    }

    #[test]
    fn two_city_matrix() {
        let m = build_distance_matrix::<f64>(&[city("Calais"), city("Milan")]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert!(m.get(0, 1) > 0.0);
    }

    #[test]
    fn full_pool_matrix_is_symmetric_with_zero_diagonal() {
        let pool = european_cities();
        let m = build_distance_matrix::<f64>(&pool).unwrap();
        assert_eq!(m.len(), 10);
        for i in 0..10 {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..10 {
                assert_eq!(m.get(i, j), m.get(j, i));
                if i != j {
                    assert!(m.get(i, j) > 0.0);
                }
            }
        }
    }

    #[test]
    fn triangle_inequality_over_all_triples() {
        let m = build_distance_matrix::<f64>(&european_cities()).unwrap();
        let mut triples = 0;
        for i in 0..10 {
            for j in (i + 1)..10 {
                for k in (j + 1)..10 {
                    triples += 1;
                    for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                        assert!(m.get(a, c) <= m.get(a, b) + m.get(b, c) + 1e-9);
                    }
                }
            }
        }
        assert_eq!(triples, 120);
    }

    #[test]
    fn equatorial_arcs_add_up() {
        let pts: Vec<City> = (0..3)
            .map(|i| City::new(format!("p{i}"), i as f64, 0.0).unwrap())
            .collect();
        let m = build_distance_matrix::<f64>(&pts).unwrap();
        let sum = m.get(0, 1) + m.get(1, 2);
        assert!((m.get(0, 2) - sum).abs() / sum < 1e-6);
        // One degree of arc on the equator.
        assert!((m.get(0, 1) - EARTH_RADIUS_KM * 1f64.to_radians()).abs() < 1e-9);
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = build_distance_matrix::<f64>(&[city("Rome"), city("Rome")]).unwrap_err();
        assert!(matches!(err, Error::DuplicateCity(_)));
    }

    #[test]
    fn invalid_coordinates_rejected() {
        assert!(City::new("x", 0.0, 91.0).is_err());
        assert!(City::new("x", 181.0, 0.0).is_err());
        assert!(City::new("", 0.0, 0.0).is_err());
    }

    #[test]
    fn two_city_tour_is_out_and_back() {
        let inst = TspInstance::<f64>::with_endpoints(
            vec![city("Calais"), city("Milan")],
            "Calais",
            "Milan",
        )
        .unwrap();
        let cost = inst.tour_cost(&Tour::new(vec![0, 1])).unwrap();
        assert_eq!(cost, 2.0 * inst.dist(0, 1));
    }

    #[test]
    fn malformed_tours_rejected() {
        let inst = select_subinstance::<f64>(&european_cities(), 5, 3, 8).unwrap();
        let (s, e) = (inst.start(), inst.end());
        let mid = inst.intermediates();
        let good: Vec<usize> = std::iter::once(s)
            .chain(mid.iter().copied())
            .chain([e])
            .collect();
        assert!(inst.tour_cost(&Tour::new(good.clone())).is_ok());

        // Every single-index corruption is rejected.
        for pos in 0..good.len() {
            for v in 0..inst.n() + 1 {
                if v == good[pos] {
                    continue;
                }
                let mut bad = good.clone();
                bad[pos] = v;
                assert!(matches!(
                    inst.tour_cost(&Tour::new(bad)),
                    Err(Error::MalformedTour(_))
                ));
            }
        }
        let mut short = good.clone();
        short.pop();
        assert!(inst.tour_cost(&Tour::new(short)).is_err());
    }

    #[test]
    fn subinstance_is_deterministic() {
        let pool = european_cities();
        let a = select_subinstance::<f64>(&pool, 4, 0, 8).unwrap();
        let b = select_subinstance::<f64>(&pool, 4, 0, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subinstance_bound_checked() {
        let pool = european_cities();
        assert!(select_subinstance::<f64>(&pool, 10, 0, 8).is_err());
        assert!(select_subinstance::<f64>(&pool, 3, 0, 8).is_err());
        assert!(select_subinstance::<f64>(&pool, 10, 0, 10).is_ok());
    }

    #[test]
    fn subinstance_always_has_endpoints() {
        let pool = european_cities();
        for seed in 0..10 {
            let inst = select_subinstance::<f64>(&pool, 8, seed, 8).unwrap();
            assert_eq!(inst.n(), 8);
            assert_eq!(inst.cities()[inst.start()].name, "Calais");
            assert_eq!(inst.cities()[inst.end()].name, "Milan");
        }
    }

    #[test]
    fn pool_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.json");
        std::fs::write(&path, serde_json::to_string(&european_cities()).unwrap()).unwrap();
        assert_eq!(load_city_pool(&path).unwrap(), european_cities());
    }
}
