use so3tos::lie::Frame;
use so3tos::wavefront::*;

fn main() {
    let fr = Frame::from_angle(0.42).unwrap();
    let n = southern_index(&fr);
    let map = min_time_map(&fr, coverage_horizon(&fr), &MapOptions { cells: 4000, s_grid: 256, t_steps: 64 });
    let tol = 2.0 * map.lattice.cell_diameter();
    let rig = (n - 1) as f64 * std::f64::consts::PI;
    let mut count = 0;
    for (i, cell) in map.cells.iter().enumerate() {
        let c = map.lattice.points()[i];
        if let (Some(b), Some(r)) = (cell.best(), cell.runner_up(&map.frame, &c)) {
            if r.time - b.time < tol && b.time < rig - tol && c.z > 3.0*map.lattice.cell_diameter() {
                count += 1;
                if count <= 15 {
                    let d1 = b.arrival_direction(&map.frame, &c);
                    let d2 = r.arrival_direction(&map.frame, &c);
                    println!("z={:+.3} t={:.3} gap={:.4} angle={:.1}deg best=({:?},s={:.3},m={},t={:.3}) runner=({:?},s={:.3},m={},t={:.3})",
                        c.z, b.time, r.time-b.time, d1.dot(&d2).acos().to_degrees(),
                        b.program.first_sign, b.program.s, b.program.arc_count, b.program.final_t,
                        r.program.first_sign, r.program.s, r.program.arc_count, r.program.final_t);
                }
            }
        }
    }
    println!("total flagged rigorous cells: {count}");
}
