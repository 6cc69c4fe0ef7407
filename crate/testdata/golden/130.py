def largest(arr):
    return max(arr)
