def avg(arr):
    return sum(arr) / len(arr)
