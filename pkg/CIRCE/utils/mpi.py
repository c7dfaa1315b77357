"""
Optional MPI support. Scan points are independent, so a scan can be split over the ranks of
an MPI run and gathered again in order. Everything works without mpi4py installed.

Set CIRCE_NOMPI to disable the mpi4py import altogether.
"""
import os
from functools import lru_cache


@lru_cache(maxsize=None)
def get_mpi_comm():
    """
    COMM_WORLD of mpi4py, or None if MPI is disabled or not installed.
    """
    if os.environ.get('CIRCE_NOMPI'):
        return None
    try:
        from mpi4py import MPI
    except ImportError:
        return None
    return MPI.COMM_WORLD


def get_mpi_size():
    """
    Number of MPI processes, 0 if not running with MPI.
    """
    comm = get_mpi_comm()
    return comm.Get_size() if comm is not None else 0


def get_mpi_rank():
    comm = get_mpi_comm()
    return comm.Get_rank() if comm is not None else 0


def split_indices(n_points):
    """
    Indices of the scan points handled by this rank (round robin).
    """
    size = max(get_mpi_size(), 1)
    return list(range(get_mpi_rank(), n_points, size))


def gather_points(local_results, n_points):
    """
    Collect {index: result} dictionaries of all ranks and return the results in scan order.
    """
    if get_mpi_size() > 1:
        merged = {}
        for part in get_mpi_comm().allgather(local_results):
            merged.update(part)
    else:
        merged = local_results
    return [merged[i] for i in range(n_points)]
