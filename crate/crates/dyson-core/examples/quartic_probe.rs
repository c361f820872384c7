use dyson_core::quartic::*;
use dyson_core::dd::{CdMat, CDd};

fn main() {
    let c = 0.15f64;
    let sc = SigmaClass::new(0.0, c, 0.0);
    let c1 = -(3.0 * (c * 1.0f64).ln() + 2.0f64.ln()) / 2.0;
    let n = 48usize;
    let margin = 38;
    let qrep = QuarticRep::new(n, margin).unwrap();
    let t = 0.5f64;
    let fd = 1e-4;
    let gs = |tt: f64| gammas_at(&sc, c1, tt).unwrap();
    let (eta, _eta_inv) = qrep.eta(gs(t));
    let (eta_p, _) = qrep.eta(gs(t + fd));
    let (eta_m, _) = qrep.eta(gs(t - fd));
    let h_mat = qrep.hamiltonian(sc.g(t).unwrap());
    let rho = eta.adjoint().matmul(&eta);
    let rho_p = eta_p.adjoint().matmul(&eta_p);
    let rho_m = eta_m.adjoint().matmul(&eta_m);
    let half = CDd::from_f64(1.0/(2.0*fd), 0.0);
    let rho_dot = rho_p.sub(&rho_m).scale(half);
    let i_c = CDd::from_f64(0.0, 1.0);
    let num = h_mat.adjoint().matmul(&rho).sub(&rho.matmul(&h_mat)).sub(&rho_dot.scale(i_c));
    let restrict = |m: &CdMat, cut: usize| {
        let mut out = CdMat::zeros(cut);
        for i in 0..cut { for j in 0..cut { out[(i,j)] = m[(i,j)]; } }
        out
    };
    let cut = n - margin;
    println!("gammas at t: {:?}", gs(t));
    println!("rho full norm {:.3e}, interior {:.3e}", rho.fro_norm(), restrict(&rho, cut).fro_norm());
    println!("rho_dot full {:.3e} interior {:.3e}", rho_dot.fro_norm(), restrict(&rho_dot, cut).fro_norm());
    println!("H full {:.3e} interior {:.3e}", h_mat.fro_norm(), restrict(&h_mat, cut).fro_norm());
    println!("num full {:.3e} interior {:.3e}", num.fro_norm(), restrict(&num, cut).fro_norm());
    // where does the interior numerator live? print top entries
    let r = restrict(&num, cut);
    let mut worst = (0usize,0usize,0.0f64);
    for i in 0..cut { for j in 0..cut {
        let v = r[(i,j)].abs();
        if v > worst.2 { worst = (i,j,v); }
    }}
    println!("worst interior entry at {:?}", worst);
    // commutator part vs rho_dot part separately
    let comm = h_mat.adjoint().matmul(&rho).sub(&rho.matmul(&h_mat));
    println!("comm interior {:.3e}  rho_dot(i) interior {:.3e}",
        restrict(&comm, cut).fro_norm(), restrict(&rho_dot, cut).fro_norm());
}
