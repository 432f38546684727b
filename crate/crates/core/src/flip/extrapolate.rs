use crate::grids::{offset, BlockGrid, Coord, MacVelocityGrid};

/// Extends face velocities from liquid-bordering faces into the surrounding
/// air by `layers` rings of breadth-first averaging. Each new face takes the
/// mean of its already valid face-lattice neighbors; faces that border no
/// liquid and are not reached are dropped.
pub fn extrapolate_velocity(grid: &mut MacVelocityGrid, layers: usize) {
    for a in 0..3 {
        let mut valid: BlockGrid<f64> = BlockGrid::new(0.0);
        for (c, v) in grid.u[a].iter() {
            if grid.face_borders_liquid(a, c) {
                valid.set(c, v);
            }
        }
        let mut frontier: Vec<Coord> = valid.coords();
        for _ in 0..layers {
            let mut cand: Vec<Coord> = Vec::new();
            for &c in &frontier {
                for ax in 0..3 {
                    for s in [-1, 1] {
                        let n = offset(c, ax, s);
                        if !valid.is_active(n) {
                            cand.push(n);
                        }
                    }
                }
            }
            cand.sort_unstable();
            cand.dedup();
            let mut added = Vec::with_capacity(cand.len());
            for &c in &cand {
                let mut sum = 0.0;
                let mut cnt = 0;
                for ax in 0..3 {
                    for s in [-1, 1] {
                        if let Some(v) = valid.get(offset(c, ax, s)) {
                            sum += v;
                            cnt += 1;
                        }
                    }
                }
                if cnt > 0 {
                    added.push((c, sum / cnt as f64));
                }
            }
            if added.is_empty() {
                break;
            }
            for &(c, v) in &added {
                valid.set(c, v);
            }
            frontier = added.into_iter().map(|(c, _)| c).collect();
        }
        grid.u[a] = valid;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{CellFlag, Lattice};
    use crate::Vec3;

    #[test]
    fn two_layers_of_constant() {
        let mut g = MacVelocityGrid::new(Lattice::new(0.1, Vec3::zeros()));
        g.flags.set([0, 0, 0], CellFlag::Liquid);
        for a in 0..3 {
            g.set_face(a, [0, 0, 0], 2.0);
            g.set_face(a, offset([0, 0, 0], a, 1), 2.0);
        }
        // stale air face far away is dropped
        g.set_face(0, [9, 9, 9], 5.0);
        extrapolate_velocity(&mut g, 2);
        assert_eq!(g.face(0, [9, 9, 9]), None);
        assert_eq!(g.face(0, [0, 2, 0]), Some(2.0));
        assert_eq!(g.face(0, [0, 3, 0]), None);
        assert_eq!(g.face(1, [1, 1, 0]), Some(2.0));
    }

    #[test]
    fn average_of_valid_neighbors() {
        let mut g = MacVelocityGrid::new(Lattice::new(0.1, Vec3::zeros()));
        g.flags.set([0, 0, 0], CellFlag::Liquid);
        g.flags.set([0, 1, 0], CellFlag::Liquid);
        g.set_face(0, [0, 0, 0], 1.0);
        g.set_face(0, [0, 1, 0], 3.0);
        g.set_face(0, [1, 0, 0], 1.0);
        g.set_face(0, [1, 1, 0], 3.0);
        extrapolate_velocity(&mut g, 1);
        // (0,0,1) touches only (0,0,0)
        assert_eq!(g.face(0, [0, 0, 1]), Some(1.0));
        // (-1,0,0) touches only (0,0,0)
        assert_eq!(g.face(0, [-1, 0, 0]), Some(1.0));
    }
}
