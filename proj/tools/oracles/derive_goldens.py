"""Independent numpy oracles for the frozen constants in the C++ tests.

Run with `python3 tools/oracles/derive_goldens.py`; every printed value is
pasted verbatim into the test that uses it.
"""
import numpy as np

np.set_printoptions(precision=17)


def cv_model(dt=0.1, q=1.0):
    I2 = np.eye(2)
    F = np.block([[I2, dt * I2], [np.zeros((2, 2)), I2]])
    Q = q * np.block([[dt**3 / 3 * I2, dt**2 / 2 * I2], [dt**2 / 2 * I2, dt * I2]])
    return F, Q


def stacked_split(n_nodes, r_var):
    first = (n_nodes + 1) // 2
    H = np.zeros((n_nodes, 4))
    H[:first, 0] = 1.0
    H[first:, 1] = 1.0
    return H, r_var * np.eye(n_nodes)


def riccati(F, H, Q, R, steps):
    P = Q.copy()
    for _ in range(steps):
        S = H @ P @ H.T + R
        P = F @ P @ F.T - F @ P @ H.T @ np.linalg.solve(S, H @ P @ F.T) + Q
        P = 0.5 * (P + P.T)
    return P


def dare_cv():
    F, Q = cv_model()
    H, R = stacked_split(100, 0.5)
    P = riccati(F, H, Q, R, 10_000)
    S = H @ P @ H.T + R
    res = P - (F @ P @ F.T - F @ P @ H.T @ np.linalg.solve(S, H @ P @ F.T) + Q)
    print("dare cv P* (N=100, r=0.5, q=1, dt=0.1):")
    print(repr(P))
    print("residual", np.linalg.norm(res) / np.linalg.norm(P))


def mode_radius():
    M = np.array([[-0.8, 0.9], [1.0, 0.0]])
    print("radius [[-0.8,0.9],[1,0]] =", repr(max(abs(np.linalg.eigvals(M)))))


def gain_form_step():
    F, Q = cv_model()
    H, R = stacked_split(4, 0.5)
    x = np.array([0.0, 0.0, 1.0, 1.0])
    P = np.eye(4)
    y = np.array([0.5, 0.2, 0.25, -0.15])
    xp = F @ x
    Pp = F @ P @ F.T + Q
    K = Pp @ H.T @ np.linalg.inv(H @ Pp @ H.T + R)
    xu = xp + K @ (y - H @ xp)
    Pu = (np.eye(4) - K @ H) @ Pp @ (np.eye(4) - K @ H).T + K @ R @ K.T
    print("gain-form step x+ =", repr(xu))
    print("gain-form step P+ =")
    print(repr(Pu))


def two_node_map():
    # node 1: x=1, P=2, y=3, H=1, R=1; node 2: x=-1, P=0.5, y=0, H=2, R=4; N=2
    A = np.array([[1.0], [2.0], [1.0], [1.0]])
    w = np.diag([1 / 1.0, 1 / 4.0, 1 / (2 * 2.0), 1 / (2 * 0.5)])
    b = np.array([3.0, 0.0, 1.0, -1.0])
    xi = np.linalg.solve(A.T @ w @ A, A.T @ w @ b)
    print("two-node scalar minimiser =", repr(xi[0]))


if __name__ == "__main__":
    dare_cv()
    mode_radius()
    gain_form_step()
    two_node_map()
