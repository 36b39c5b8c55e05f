"""Reference implementation of the dealiased advection kernel (numpy matmuls)."""


def advect(plan, v, w):
    """Products ``v vx + w vz`` and ``v wx + w wz`` analyzed to ``|k1| <= m, k2 <= 2m``.

    Parameters
    ----------
    plan : AdvectionPlan
        Precomputed basis tables.
    v, w : ndarray, shape (2m+1, m+1)
        Even and odd coefficient arrays.
    """
    X, Xd = plan.x_synth, plan.x_synth_dx
    V = v @ plan.zc.T
    Vz = v @ plan.zc_dz.T
    W = w @ plan.zs.T
    Wz = w @ plan.zs_dz.T
    vv = (X @ V).real
    vx = (Xd @ V).real
    vz = (X @ Vz).real
    ww = (X @ W).real
    wx = (Xd @ W).real
    wz = (X @ Wz).real
    gv = vv * vx + ww * vz
    gw = vv * wx + ww * wz
    out_v = (plan.x_anal @ gv) @ plan.zc_anal
    out_w = (plan.x_anal @ gw) @ plan.zs_anal
    return out_v, out_w
