use crate::error::{Error, Result};
use crate::instance::{haversine_km, City, Tour, TspInstance};
use crate::perm::Lexicographic;

/// Coordinate mean of a group of cities.
pub fn group_centroid(cities: &[City], members: &[usize]) -> City {
    let k = members.len().max(1) as f64;
    City {
        name: String::new(),
        lon: members.iter().map(|&i| cities[i].lon).sum::<f64>() / k,
        lat: members.iter().map(|&i| cities[i].lat).sum::<f64>() / k,
    }
}

/// Join per-cluster open paths into one fixed-endpoint tour.
///
/// The path holding the start city goes first and the one holding the end
/// city goes last; the middle paths are ordered by exhaustive search over
/// great-circle distances between cluster centroids. Path orientations are
/// then chosen exhaustively to minimize the total length of the connecting
/// edges, the end paths being oriented so the tour starts and ends on the
/// fixed cities.
pub fn stitch_clusters(paths: &[Vec<usize>], instance: &TspInstance<f64>) -> Result<Tour> {
    let n = instance.n();
    let (s, e) = (instance.start(), instance.end());
    let mut seen = vec![false; n];
    for &c in paths.iter().flatten() {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(Error::invalid(format!(
                "cluster paths do not partition the cities (city {c})"
            )));
        }
    }
    if seen.iter().any(|v| !v) || paths.iter().any(Vec::is_empty) {
        return Err(Error::invalid("cluster paths do not partition the cities"));
    }
    let holder = |city: usize| {
        paths
            .iter()
            .position(|p| p.contains(&city))
            .expect("partition")
    };
    let (ps, pe) = (holder(s), holder(e));

    // Orient a path so `city` sits at the requested end.
    let fix = |p: &[usize], city: usize, at_front: bool| -> Result<Vec<usize>> {
        let mut v = p.to_vec();
        let want = if at_front { v[0] } else { v[v.len() - 1] };
        if want != city {
            v.reverse();
            let now = if at_front { v[0] } else { v[v.len() - 1] };
            if now != city {
                return Err(Error::invalid(format!(
                    "city {city} is interior to its cluster path"
                )));
            }
        }
        Ok(v)
    };

    if ps == pe {
        if paths.len() != 1 {
            return Err(Error::invalid(
                "start and end share a cluster but other clusters exist",
            ));
        }
        let v = fix(&paths[ps], s, true)?;
        let v = fix(&v, e, false)?;
        let tour = Tour::new(v);
        instance.validate_tour(&tour)?;
        return Ok(tour);
    }

    let first = fix(&paths[ps], s, true)?;
    let last = fix(&paths[pe], e, false)?;
    let middle: Vec<usize> = (0..paths.len()).filter(|&i| i != ps && i != pe).collect();

    let cities = instance.cities();
    let centroid: Vec<City> = paths.iter().map(|p| group_centroid(cities, p)).collect();
    let mut best_order: Option<(Vec<usize>, f64)> = None;
    for perm in Lexicographic::new(middle.len()) {
        let seq: Vec<usize> = std::iter::once(ps)
            .chain(perm.iter().map(|&k| middle[k]))
            .chain(std::iter::once(pe))
            .collect();
        let len: f64 = seq
            .windows(2)
            .map(|w| haversine_km::<f64>(&centroid[w[0]], &centroid[w[1]]))
            .sum();
        if best_order.as_ref().is_none_or(|(_, b)| len < *b) {
            best_order = Some((seq[1..seq.len() - 1].to_vec(), len));
        }
    }
    let mids = best_order.expect("at least one ordering").0;

    let d = |a: usize, b: usize| instance.dist(a, b);
    let mut best: Option<(u64, f64)> = None;
    for mask in 0..1u64 << mids.len() {
        let mut cur = *first.last().unwrap();
        let mut total = 0.0;
        for (bit, &m) in mids.iter().enumerate() {
            let p = &paths[m];
            let (entry, exit) = if mask >> bit & 1 == 1 {
                (p[p.len() - 1], p[0])
            } else {
                (p[0], p[p.len() - 1])
            };
            total += d(cur, entry);
            cur = exit;
        }
        total += d(cur, last[0]);
        if best.is_none_or(|(_, b)| total < b) {
            best = Some((mask, total));
        }
    }
    let mask = best.expect("at least one orientation").0;

    let mut order = first;
    for (bit, &m) in mids.iter().enumerate() {
        if mask >> bit & 1 == 1 {
            order.extend(paths[m].iter().rev());
        } else {
            order.extend(paths[m].iter());
        }
    }
    order.extend(last);
    let tour = Tour::new(order);
    instance.validate_tour(&tour)?;
    Ok(tour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::brute_force_optimal;
    use crate::instance::{european_cities, select_subinstance};

    fn inst(n: usize, seed: u64) -> TspInstance<f64> {
        select_subinstance(&european_cities(), n, seed, 8).unwrap()
    }

    #[test]
    fn single_cluster_is_the_path() {
        let i = inst(5, 0);
        let path: Vec<usize> = std::iter::once(i.start())
            .chain(i.intermediates())
            .chain(std::iter::once(i.end()))
            .collect();
        let rev: Vec<usize> = path.iter().rev().copied().collect();
        assert_eq!(
            stitch_clusters(std::slice::from_ref(&path), &i)
                .unwrap()
                .into_order(),
            path
        );
        assert_eq!(stitch_clusters(&[rev], &i).unwrap().into_order(), path);
    }

    #[test]
    fn two_clusters_pick_the_cheaper_orientation() {
        for seed in 0..10 {
            let i = inst(6, seed);
            let mids = i.intermediates();
            // Singleton holding the start city, the rest ending at the end city.
            let a = vec![i.start()];
            let mut b = mids.clone();
            b.push(i.end());
            let t = stitch_clusters(&[a.clone(), b.clone()], &i).unwrap();
            assert_eq!(t.order(), [a.as_slice(), b.as_slice()].concat());

            // Start city alone at the front, a free middle cluster, end city alone.
            let mid = mids.clone();
            let paths = vec![vec![i.start()], mid.clone(), vec![i.end()]];
            let t = stitch_clusters(&paths, &i).unwrap();
            let fwd: Vec<usize> = [vec![i.start()], mid.clone(), vec![i.end()]].concat();
            let bwd: Vec<usize> = [
                vec![i.start()],
                mid.iter().rev().copied().collect(),
                vec![i.end()],
            ]
            .concat();
            let cf = i.tour_cost(&Tour::new(fwd.clone())).unwrap();
            let cb = i.tour_cost(&Tour::new(bwd.clone())).unwrap();
            let expect = if cb < cf { bwd } else { fwd };
            assert_eq!(t.into_order(), expect);
        }
    }

    #[test]
    fn stitched_cost_bounded_below_by_optimum() {
        for seed in 0..10 {
            let i = inst(6, seed);
            let mids = i.intermediates();
            let paths = vec![
                vec![i.start(), mids[0]],
                vec![mids[1], mids[2]],
                vec![mids[3], i.end()],
            ];
            let t = stitch_clusters(&paths, &i).unwrap();
            let (_, opt) = brute_force_optimal(&i).unwrap();
            assert!(i.tour_cost(&t).unwrap() >= opt - 1e-9);
        }
    }

    #[test]
    fn rejects_non_partitions() {
        let i = inst(5, 1);
        let m = i.intermediates();
        assert!(stitch_clusters(&[vec![i.start(), m[0]], vec![m[1], i.end()]], &i).is_err());
        assert!(stitch_clusters(
            &[vec![i.start(), m[0], m[0]], vec![m[1], m[2], i.end()]],
            &i
        )
        .is_err());
        assert!(stitch_clusters(&[vec![m[0], i.start(), m[1]], vec![m[2], i.end()]], &i).is_err());
    }
}
