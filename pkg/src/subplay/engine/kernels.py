"""Hot inner loops of the particle world.

Every kernel exists as ``<name>_nb`` (explicit loops, numba-compiled) and
``<name>_np`` (vectorised numpy). The two are interchangeable and are tested
against each other; ``<name>`` is the one selected at import time.
"""

import numpy as np

from subplay._accel import njit, select


@njit
def _softplus(x):
    return max(x, 0.0) + np.log1p(np.exp(-abs(x)))


@njit
def physics_step_nb(pos, vel, force, radius, max_speed, movable, collide,
                    damping, dt, contact_force, contact_margin):
    n = pos.shape[0]
    f = force.copy()
    for a in range(n):
        if not collide[a]:
            continue
        for b in range(a + 1, n):
            if not collide[b]:
                continue
            if not (movable[a] or movable[b]):
                continue
            dx = pos[a, 0] - pos[b, 0]
            dy = pos[a, 1] - pos[b, 1]
            dist = np.sqrt(dx * dx + dy * dy)
            if dist == 0.0:
                continue
            dist_min = radius[a] + radius[b]
            pen = _softplus(-(dist - dist_min) / contact_margin) * contact_margin
            scale = contact_force * pen / dist
            if movable[a]:
                f[a, 0] += scale * dx
                f[a, 1] += scale * dy
            if movable[b]:
                f[b, 0] -= scale * dx
                f[b, 1] -= scale * dy
    new_pos = pos.copy()
    new_vel = vel.copy()
    for a in range(n):
        if not movable[a]:
            continue
        vx = vel[a, 0] * (1.0 - damping) + f[a, 0] * dt
        vy = vel[a, 1] * (1.0 - damping) + f[a, 1] * dt
        speed = np.sqrt(vx * vx + vy * vy)
        if speed > max_speed[a]:
            vx = vx / speed * max_speed[a]
            vy = vy / speed * max_speed[a]
        new_vel[a, 0] = vx
        new_vel[a, 1] = vy
        new_pos[a, 0] = pos[a, 0] + vx * dt
        new_pos[a, 1] = pos[a, 1] + vy * dt
    return new_pos, new_vel


def physics_step_np(pos, vel, force, radius, max_speed, movable, collide,
                    damping, dt, contact_force, contact_margin):
    n = pos.shape[0]
    f = force.copy()
    a_idx, b_idx = np.triu_indices(n, k=1)
    keep = collide[a_idx] & collide[b_idx] & (movable[a_idx] | movable[b_idx])
    a_idx, b_idx = a_idx[keep], b_idx[keep]
    delta = pos[a_idx] - pos[b_idx]
    dist = np.sqrt(delta[:, 0] * delta[:, 0] + delta[:, 1] * delta[:, 1])
    nz = dist != 0.0
    a_idx, b_idx, delta, dist = a_idx[nz], b_idx[nz], delta[nz], dist[nz]
    dist_min = radius[a_idx] + radius[b_idx]
    x = -(dist - dist_min) / contact_margin
    pen = (np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))) * contact_margin
    pair_force = delta * (contact_force * pen / dist)[:, None]
    ma, mb = movable[a_idx], movable[b_idx]
    np.add.at(f, a_idx[ma], pair_force[ma])
    np.add.at(f, b_idx[mb], -pair_force[mb])
    new_vel = vel * (1.0 - damping) + f * dt
    speed = np.sqrt(new_vel[:, 0] * new_vel[:, 0] + new_vel[:, 1] * new_vel[:, 1])
    over = movable & (speed > max_speed)
    new_vel[over] = new_vel[over] / speed[over, None] * max_speed[over, None]
    new_vel[~movable] = vel[~movable]
    new_pos = pos + new_vel * dt
    new_pos[~movable] = pos[~movable]
    return new_pos, new_vel


@njit
def collision_matrix_nb(pos, radius, victim_idx, adversary_idx):
    nv = victim_idx.shape[0]
    na = adversary_idx.shape[0]
    out = np.zeros((nv, na), dtype=np.bool_)
    for j in range(nv):
        v = victim_idx[j]
        for i in range(na):
            a = adversary_idx[i]
            dx = pos[v, 0] - pos[a, 0]
            dy = pos[v, 1] - pos[a, 1]
            out[j, i] = np.sqrt(dx * dx + dy * dy) < radius[v] + radius[a]
    return out


def collision_matrix_np(pos, radius, victim_idx, adversary_idx):
    delta = pos[victim_idx][:, None, :] - pos[adversary_idx][None, :, :]
    dist = np.sqrt(delta[..., 0] * delta[..., 0] + delta[..., 1] * delta[..., 1])
    return dist < radius[victim_idx][:, None] + radius[adversary_idx][None, :]


@njit
def build_observations_nb(pos, vel, self_idx, landmark_idx, team_idx, opp_idx, dim):
    n = self_idx.shape[0]
    out = np.zeros((n, dim))
    for r in range(n):
        s = self_idx[r]
        px = pos[s, 0]
        py = pos[s, 1]
        out[r, 0] = vel[s, 0]
        out[r, 1] = vel[s, 1]
        out[r, 2] = px
        out[r, 3] = py
        c = 4
        for q in range(landmark_idx.shape[0]):
            e = landmark_idx[q]
            out[r, c] = pos[e, 0] - px
            out[r, c + 1] = pos[e, 1] - py
            c += 2
        for q in range(team_idx.shape[0]):
            e = team_idx[q]
            if e == s:
                continue
            out[r, c] = pos[e, 0] - px
            out[r, c + 1] = pos[e, 1] - py
            c += 2
        for q in range(opp_idx.shape[0]):
            e = opp_idx[q]
            out[r, c] = pos[e, 0] - px
            out[r, c + 1] = pos[e, 1] - py
            c += 2
        for q in range(opp_idx.shape[0]):
            e = opp_idx[q]
            out[r, c] = vel[e, 0]
            out[r, c + 1] = vel[e, 1]
            c += 2
    return out


def build_observations_np(pos, vel, self_idx, landmark_idx, team_idx, opp_idx, dim):
    n = self_idx.shape[0]
    out = np.zeros((n, dim))
    for r in range(n):
        s = self_idx[r]
        p = pos[s]
        mates = team_idx[team_idx != s]
        parts = (vel[s], p, (pos[landmark_idx] - p).ravel(), (pos[mates] - p).ravel(),
                 (pos[opp_idx] - p).ravel(), vel[opp_idx].ravel())
        row = np.concatenate(parts)
        out[r, :row.shape[0]] = row
    return out


physics_step = select(physics_step_nb, physics_step_np)
collision_matrix = select(collision_matrix_nb, collision_matrix_np)
build_observations = select(build_observations_nb, build_observations_np)
