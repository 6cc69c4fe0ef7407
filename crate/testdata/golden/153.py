def join_all(nums):
    return ' '.join(nums)
