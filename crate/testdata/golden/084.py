def compute_mean(nums):
    total = sum(nums)
    count = len(nums)
    return total / count if count else 0
