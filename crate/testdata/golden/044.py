def tail(nums):
    return nums[len(nums) - 1]
