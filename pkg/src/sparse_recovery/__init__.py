"""
Sparse signal recovery with the smoothed l1/l2 penalty model.

core holds the objective and proximity operators, solvers the proximal-gradient
algorithms, experiments the instance generators and trial runner.
"""
